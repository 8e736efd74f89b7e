"""
scaling: growth of E₂ᵇ under v̂(k) → v̂(k/Λ)
"""
import argparse
import logging
from typing import Optional

from ..diagnostics import DiagnosticsTracker
from ..series import SCALING_COLUMNS, scaling_probe
from .base import CommandOutput, RunConfig

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda-scale", dest="lambda_scales", help="comma-separated increasing scales Λ")
    parser.add_argument("--rel-cutoff", type=float, help="truncate the lattice where v̂ drops below rel·g")


def execute(config: RunConfig, tracker: Optional[DiagnosticsTracker] = None) -> CommandOutput:
    result = scaling_probe(
        config.spec(),
        config.lambda_scales,
        d=config.dim,
        rel_cutoff=config.rel_cutoff,
        workers=config.workers,
        tracker=tracker,
    )
    out = CommandOutput()
    out.add_table("scaling.csv", SCALING_COLUMNS, result.rows)
    out.documents["scaling.json"] = result.to_dict()
    out.summary = {
        "exponent": result.exponent,
        "tail_exponent": result.tail_exponent,
        "sign_at_max": result.sign_at_max,
        "leading_ratio_at_max": result.leading_ratio_at_max,
        "flags": result.flags,
    }
    return out
