"""
coeffs: per-mode Bogoliubov coefficients and the Bogoliubov ground energy
"""
import argparse
import logging
from typing import Optional

from ..bogoliubov import depletion, e_B, e_B_alt, qp_table
from ..diagnostics import DiagnosticsTracker
from .base import CommandOutput, RunConfig, resolve_modes

logger = logging.getLogger(__name__)

COLUMNS = ["n", "k2", "vhat", "eps", "alpha", "sigma", "gamma"]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--modes", help="ball:R | list:PATH | support (default: support or cutoff ball)")


def execute(config: RunConfig, tracker: Optional[DiagnosticsTracker] = None) -> CommandOutput:
    spec = config.spec()
    M = resolve_modes(config, spec)
    logger.info(f"coeffs: {len(M)} modes in d={M.dim}")
    table = qp_table(M, spec)

    out = CommandOutput()
    out.add_table("coeffs.csv", COLUMNS, table.rows())
    out.summary = {
        "modes": len(M),
        "e_B": e_B(M, spec),
        "e_B_alt": e_B_alt(M, spec),
        "depletion": depletion(M, spec),
    }
    out.documents["coeffs.json"] = dict(out.summary)
    return out
