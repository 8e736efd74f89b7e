"""
series: closed-form E₀ᵇ, E₁ᵇ, E₂ᵇ over a cutoff sweep or one mode set
"""
import argparse
import logging
from typing import Optional

from ..core.errors import ConfigError
from ..diagnostics import DiagnosticsTracker
from ..series import CSV_COLUMNS, convergence_study, series_on_modes
from .base import CommandOutput, RunConfig, resolve_modes

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cutoffs", help="comma-separated momentum cutoffs (ball mode sets)")
    parser.add_argument("--modes", help="ball:R | list:PATH | support; replaces the cutoff sweep")


def execute(config: RunConfig, tracker: Optional[DiagnosticsTracker] = None) -> CommandOutput:
    spec = config.spec()
    if config.cutoffs and config.modes:
        raise ConfigError("give either --cutoffs or --modes, not both", {"fields": ["cutoffs", "modes"]})
    if config.cutoffs:
        result = convergence_study(spec, config.cutoffs, d=config.dim, workers=config.workers, tracker=tracker)
    else:
        M = resolve_modes(config, spec)
        result = series_on_modes(spec, M, workers=config.workers, tracker=tracker)

    out = CommandOutput()
    out.add_table("series.csv", CSV_COLUMNS, result.rows)
    out.documents["series.json"] = result.to_dict()
    out.summary = {
        "e0_binding": result.e0_binding,
        "e1_binding": result.e1_binding,
        "e2_binding": result.e2_binding,
        "flags": result.flags,
    }
    return out
