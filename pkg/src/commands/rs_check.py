"""
rs-check: Rayleigh–Schrödinger binding coefficients against the closed forms
"""
import argparse
import logging
from typing import Optional

from ..diagnostics import DiagnosticsTracker
from ..fock_space import ExcitationBasis
from ..qp_perturbation import RS_COLUMNS, TAYLOR_COLUMNS, rs_sweep, taylor_residual_probe
from ..series import e1_binding, e2_binding
from .base import CommandOutput, RunConfig, resolve_modes

logger = logging.getLogger(__name__)

FOCK_TERM_COLUMNS = ["nmax", "t_o_h2", "t_o_t", "t_o_h1_o_h1", "h1_o_tc_o_h1", "total"]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--modes", help="ball:R | list:PATH | support")
    parser.add_argument("--nmax-sweep", dest="nmax_sweep", help="comma-separated excitation caps")
    parser.add_argument("--nmax", type=int, help="single excitation cap (replaces --nmax-sweep)")
    parser.add_argument("--order", type=int, choices=(1, 2))
    parser.add_argument("--probe-taylor", dest="probe_taylor", action="store_true", default=None)
    parser.add_argument("--taylor-N", dest="taylor_N", help="particle numbers of the Taylor probe")


def execute(config: RunConfig, tracker: Optional[DiagnosticsTracker] = None) -> CommandOutput:
    spec = config.spec()
    M = resolve_modes(config, spec)
    targets = {"e1_binding": e1_binding(M, spec)}
    if config.order >= 2:
        targets["e2_binding"] = e2_binding(M, spec, workers=config.workers, tracker=tracker)
    rows = rs_sweep(
        M,
        spec,
        config.nmax_sweep,
        order=config.order,
        targets=targets,
        full_space=config.full_space,
        tracker=tracker,
    )

    out = CommandOutput()
    out.add_table("rs_check.csv", RS_COLUMNS, [r.csv_row() for r in rows])
    if config.order >= 2:
        out.add_table(
            "rs_fock_terms.csv",
            FOCK_TERM_COLUMNS,
            [dict(r.fock_terms, nmax=r.n_max) for r in rows],
        )
    document = {"modes": len(M), "targets": targets, "rows": [r.csv_row() for r in rows]}

    if config.probe_taylor:
        basis = ExcitationBasis(M, config.taylor_nmax, full_space=config.full_space)
        probe = taylor_residual_probe(basis, spec, config.taylor_orders, config.taylor_N, seed=config.seed)
        out.add_table("taylor.csv", TAYLOR_COLUMNS, probe.rows)
        document["taylor"] = probe.to_dict()

    out.documents["rs_check.json"] = document
    last = rows[-1].csv_row() if rows else {}
    out.summary = {
        "nmax": last.get("nmax"),
        "abs_err_E1": last.get("abs_err_E1"),
        "abs_err_E2": last.get("abs_err_E2"),
    }
    return out
