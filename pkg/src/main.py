"""
Command-line front door for binding-bench

    binding-bench coeffs     --potential P --dim 1 [--modes ...]
    binding-bench series     --potential P --cutoffs 10,20,40
    binding-bench scaling    --potential P --lambda-scale 4,8,16,32
    binding-bench rs-check   --potential P --modes support --nmax-sweep 4,6,8
    binding-bench oracle-fit --potential P --modes support --N-list 16,24,32,48

Each run writes CSV tables and JSON documents into --out (with the resolved
configuration embedded) and prints a JSON summary. Failures exit nonzero
with a machine-readable error record.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .commands import COMMANDS
from .commands.base import RunConfig
from .core.artifacts import config_hash, write_csv, write_error, write_json
from .core.config import get_settings, override_settings
from .core.errors import BindingBenchError, ConfigError
from .core.loaders import load_potential, parse_float_list, parse_int_list
from .core.logging_setup import configure_logging
from .core.metrics import stage_timer, write_metrics
from .diagnostics import DiagnosticsTracker

logger = logging.getLogger(__name__)

LIST_FIELDS = {
    "cutoffs": parse_float_list,
    "lambda_scales": parse_float_list,
    "N_list": parse_int_list,
    "nmax_sweep": parse_int_list,
    "taylor_N": parse_int_list,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", help="potential JSON file or inline JSON object")
    common.add_argument("--dim", type=int, choices=(1, 2, 3))
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int)
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--seed", type=int)
    common.add_argument("--full-space", dest="full_space", action="store_true", default=None)
    common.add_argument("--dense-threshold", dest="dense_threshold", type=int)
    common.add_argument("--config", dest="config_file", help="RunConfig JSON; flags override its values")
    common.add_argument("--log-level", dest="log_level")
    common.add_argument("--log-format", dest="log_format", choices=("console", "json"))

    parser = argparse.ArgumentParser(
        prog="binding-bench",
        description="Binding-energy expansion of the homogeneous Bose gas",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, module in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=(module.__doc__ or "").strip().splitlines()[0])
        module.add_arguments(sp)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge --config JSON with explicit flags and validate"""
    values: Dict[str, Any] = {}
    if getattr(args, "config_file", None):
        path = Path(args.config_file).expanduser()
        try:
            values.update(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {path}: {e}", {"fields": ["config"]}) from e

    for key, value in vars(args).items():
        if key in ("config_file", "nmax") or value is None:
            continue
        if key in LIST_FIELDS and isinstance(value, str):
            value = LIST_FIELDS[key](value, key)
        values[key] = value
    if getattr(args, "nmax", None) is not None:
        values["nmax_sweep"] = [args.nmax]

    potential = values.get("potential")
    if isinstance(potential, str):
        values["potential"] = load_potential(potential).to_dict()
    elif isinstance(potential, dict):
        from .potential import PotentialSpec

        values["potential"] = PotentialSpec.from_dict(potential).require_nonzero().to_dict()
    else:
        raise ConfigError("a potential is required (--potential)", {"fields": ["potential"]})

    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        fields = [".".join(str(p) for p in err["loc"]) for err in e.errors()]
        raise ConfigError(f"invalid run configuration: {e.errors()[0]['msg']}", {"fields": fields}) from e


def _fail(record: Dict[str, Any], out_dir: Optional[Path]) -> int:
    write_error(out_dir, record)
    print(json.dumps(record, sort_keys=True, default=str), file=sys.stderr)
    return int(record["exit_code"])


def run(config: RunConfig) -> int:
    """Execute one subcommand and write its artifacts; returns the exit status"""
    configure_logging(config.log_level, config.log_format)
    settings = override_settings(
        SEED=config.seed,
        DENSE_THRESHOLD=config.dense_threshold,
        WORKERS=config.workers,
        DETERMINISTIC=config.deterministic,
    )
    out_dir = Path(config.out).expanduser() if config.out else None
    provenance = config.provenance()
    digest = config_hash(provenance)

    diag_path = settings.DIAGNOSTICS_PATH
    if diag_path is None and out_dir is not None:
        diag_path = str(out_dir / "diagnostics.jsonl")
    tracker = DiagnosticsTracker(path=diag_path)

    logger.info(f"binding-bench {config.command}: config-hash {digest[:12]}")
    try:
        with stage_timer(config.command):
            output = COMMANDS[config.command].execute(config, tracker)
    except BindingBenchError as e:
        logger.error(f"{config.command} failed: {e.message}")
        return _fail(e.to_record(), out_dir)
    except Exception as e:
        logger.exception(f"{config.command} failed unexpectedly")
        return _fail({"error": type(e).__name__, "message": str(e), "exit_code": 1, "details": {}}, out_dir)

    flags = [f"{e['kind']}: {e['description']}" for e in tracker.entries]
    summary = dict(output.summary, command=config.command, config_hash=digest, diagnostics=flags)
    if out_dir is not None:
        for name, table in output.tables.items():
            write_csv(out_dir / name, table["columns"], table["rows"], digest=digest)
        for name, document in output.documents.items():
            payload = dict(document, config=provenance, config_hash=digest, diagnostics=flags)
            if not config.deterministic:
                payload["session"] = tracker.get_session_summary()
            write_json(out_dir / name, payload)
        write_metrics(out_dir)

    print(json.dumps(summary, sort_keys=True, default=str, indent=2))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out).expanduser() if getattr(args, "out", None) else None
    try:
        config = build_config(args)
    except BindingBenchError as e:
        configure_logging(get_settings().LOG_LEVEL, get_settings().LOG_FORMAT)
        logger.error(f"configuration rejected: {e.message}")
        return _fail(e.to_record(), out_dir)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
