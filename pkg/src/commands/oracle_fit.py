"""
oracle-fit: exact diagonalization sweep over N and the binding-series fit
"""
import argparse
import logging
from typing import Optional

from ..diagnostics import DiagnosticsTracker
from ..fock_oracle import fit_binding_series
from .base import CommandOutput, RunConfig, resolve_modes

logger = logging.getLogger(__name__)

COLUMNS = ["N", "lambda", "E_N", "E_Nm1", "deltaE"]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--modes", help="ball:R | list:PATH | support")
    parser.add_argument("--N-list", dest="N_list", help="comma-separated particle numbers")
    parser.add_argument("--order", type=int, choices=(1, 2))


def execute(config: RunConfig, tracker: Optional[DiagnosticsTracker] = None) -> CommandOutput:
    spec = config.spec()
    M = resolve_modes(config, spec)
    fit, points = fit_binding_series(
        config.N_list,
        spec,
        M,
        order=config.order,
        workers=config.workers,
        full_space=config.full_space,
        tracker=tracker,
    )
    out = CommandOutput()
    out.add_table("oracle.csv", COLUMNS, [p.to_dict() for p in points])
    out.documents["oracle_fit.json"] = fit.to_dict()
    out.summary = {
        "coefficients": fit.coefficients,
        "residual_exponent": fit.residual_exponent,
        "comparison": fit.comparison(),
    }
    return out
