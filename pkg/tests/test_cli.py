"""
End-to-end tests of the binding-bench command line
"""
import json

import pytest

from src.core.artifacts import read_csv
from src.main import build_config, build_parser, main

TABULATED = json.dumps({"kind": "tabulated", "v0": 1.0, "entries": [{"n": [1], "v": 1.0}]})
GAUSSIAN = json.dumps({"kind": "gaussian", "g": 1.0, "s": 4.0})


def run_cli(args, tmp_path, capsys):
    code = main(args + ["--out", str(tmp_path)])
    captured = capsys.readouterr()
    return code, captured


def test_coeffs_writes_table_and_document(tmp_path, capsys):
    code, captured = run_cli(["coeffs", "--potential", TABULATED], tmp_path, capsys)
    assert code == 0
    lines = (tmp_path / "coeffs.csv").read_text().splitlines()
    assert lines[0].startswith("# config-hash: ")
    assert lines[1] == "n,k2,vhat,eps,alpha,sigma,gamma"
    assert len(read_csv(tmp_path / "coeffs.csv")) == 4
    document = json.loads((tmp_path / "coeffs.json").read_text())
    assert document["config"]["command"] == "coeffs"
    assert document["config_hash"] == lines[0].split(": ")[1]
    assert "session" not in document
    summary = json.loads(captured.out)
    assert summary["modes"] == 4
    assert summary["e_B"] == pytest.approx(summary["e_B_alt"], rel=1e-12)
    assert (tmp_path / "metrics.prom").exists()


def test_deterministic_reruns_are_identical(tmp_path, capsys):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert main(["coeffs", "--potential", GAUSSIAN, "--modes", "ball:30", "--out", str(out)]) == 0
    capsys.readouterr()
    for name in ("coeffs.csv", "coeffs.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_non_deterministic_run_adds_session(tmp_path, capsys):
    code, _ = run_cli(["coeffs", "--potential", TABULATED, "--no-deterministic"], tmp_path, capsys)
    assert code == 0
    assert "session" in json.loads((tmp_path / "coeffs.json").read_text())


@pytest.mark.parametrize(
    "potential",
    [
        json.dumps({"kind": "gaussian", "g": 1.0}),
        '{"kind": ',
        json.dumps({"kind": "tabulated", "v0": 0.0, "entries": []}),
        "/nonexistent/potential.json",
    ],
)
def test_bad_potential_exits_2(potential, tmp_path, capsys):
    code, captured = run_cli(["coeffs", "--potential", potential], tmp_path, capsys)
    assert code == 2
    record = json.loads((tmp_path / "error.json").read_text())
    assert record["exit_code"] == 2
    assert record["error"] == "ConfigError"
    assert json.loads(captured.err.strip().splitlines()[-1])["exit_code"] == 2


def test_missing_potential_exits_2(tmp_path, capsys):
    code, _ = run_cli(["coeffs"], tmp_path, capsys)
    assert code == 2
    assert json.loads((tmp_path / "error.json").read_text())["details"]["fields"] == ["potential"]


def test_series_rejects_cutoffs_with_modes(tmp_path, capsys):
    code, _ = run_cli(
        ["series", "--potential", TABULATED, "--cutoffs", "10,20", "--modes", "support"], tmp_path, capsys
    )
    assert code == 2


def test_series_cutoff_sweep(tmp_path, capsys):
    code, captured = run_cli(["series", "--potential", GAUSSIAN, "--cutoffs", "10,20,40"], tmp_path, capsys)
    assert code == 0
    rows = read_csv(tmp_path / "series.csv")
    assert [float(r["cutoff"]) for r in rows] == [10.0, 20.0, 40.0]
    document = json.loads((tmp_path / "series.json").read_text())
    assert set(document["extrapolated"]) == {"e1_binding", "e2_binding"}
    assert json.loads(captured.out)["flags"] == []


def test_series_on_open_modes_flags_closure(tmp_path, capsys):
    code, captured = run_cli(
        ["series", "--potential", TABULATED, "--modes", "list:[[1], [-1]]"], tmp_path, capsys
    )
    assert code == 0
    summary = json.loads(captured.out)
    assert summary["flags"] == ["closure_precondition"]
    assert any(flag.startswith("Precondition") for flag in summary["diagnostics"])
    assert (tmp_path / "diagnostics.jsonl").exists()


def test_scaling_needs_gaussian(tmp_path, capsys):
    code, _ = run_cli(["scaling", "--potential", TABULATED], tmp_path, capsys)
    assert code == 4
    assert json.loads((tmp_path / "error.json").read_text())["error"] == "UnsupportedError"


def test_scaling_small_sweep(tmp_path, capsys):
    code, _ = run_cli(
        ["scaling", "--potential", json.dumps({"kind": "gaussian", "g": 1.0, "s": 3.0}), "--lambda-scale", "1,2,4"],
        tmp_path,
        capsys,
    )
    assert code == 0
    assert len(read_csv(tmp_path / "scaling.csv")) == 3


def test_oracle_fit_needs_enough_points(tmp_path, capsys):
    code, _ = run_cli(
        ["oracle-fit", "--potential", TABULATED, "--modes", "support", "--N-list", "16,24,32"], tmp_path, capsys
    )
    assert code == 7


def test_rs_check(tmp_path, capsys):
    code, captured = run_cli(
        ["rs-check", "--potential", TABULATED, "--modes", "support", "--nmax-sweep", "2,4"], tmp_path, capsys
    )
    assert code == 0
    summary = json.loads(captured.out)
    assert summary["nmax"] == 4
    assert summary["abs_err_E1"] < 1e-6
    rows = read_csv(tmp_path / "rs_check.csv")
    assert [r["nmax"] for r in rows] == ["2", "4"]
    assert len(read_csv(tmp_path / "rs_fock_terms.csv")) == 2


def test_rs_check_single_nmax_first_order(tmp_path, capsys):
    code, _ = run_cli(
        ["rs-check", "--potential", TABULATED, "--modes", "support", "--nmax", "2", "--order", "1"],
        tmp_path,
        capsys,
    )
    assert code == 0
    assert not (tmp_path / "rs_fock_terms.csv").exists()
    assert len(read_csv(tmp_path / "rs_check.csv")) == 1


def test_config_file(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"potential": json.loads(TABULATED), "dim": 1, "log_format": "json"}))
    code, _ = run_cli(["coeffs", "--config", str(config)], tmp_path / "out", capsys)
    assert code == 0
    assert (tmp_path / "out" / "coeffs.csv").exists()

    config.write_text(json.dumps({"potential": json.loads(TABULATED), "bogus": 1}))
    code, _ = run_cli(["coeffs", "--config", str(config)], tmp_path / "bad", capsys)
    assert code == 2
    assert "bogus" in json.loads((tmp_path / "bad" / "error.json").read_text())["details"]["fields"]


def test_flags_override_config_file(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"potential": json.loads(TABULATED), "N_list": [8, 16]}))
    args = build_parser().parse_args(["oracle-fit", "--config", str(config), "--N-list", "16,24,32,48"])
    assert build_config(args).N_list == [16, 24, 32, 48]


def test_invalid_values_rejected(tmp_path, capsys):
    code, _ = run_cli(["coeffs", "--potential", TABULATED, "--workers", "0"], tmp_path, capsys)
    assert code == 2
    code, _ = run_cli(["coeffs", "--potential", TABULATED, "--log-level", "LOUD"], tmp_path, capsys)
    assert code == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["coeffs", "--dim", "4"])
