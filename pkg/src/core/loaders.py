"""
Shared loaders for CLI inputs: potentials, mode sets and numeric lists
"""
import logging
import math
from pathlib import Path
from typing import List

from ..lattice import ModeSet, enumerate_ball
from ..potential import PotentialSpec
from .errors import ConfigError

logger = logging.getLogger(__name__)


def load_potential(value: str) -> PotentialSpec:
    """--potential accepts a JSON file path or an inline JSON object"""
    if value is None or not str(value).strip():
        raise ConfigError("a potential is required", {"fields": ["potential"]})
    text = str(value).strip()
    if not text.startswith("{"):
        path = Path(text).expanduser()
        if not path.is_file():
            raise ConfigError(f"potential file not found: {text}", {"fields": ["potential"]})
        logger.info(f"Loading potential from {path}")
        text = path.read_text(encoding="utf-8")
    return PotentialSpec.from_json(text).require_nonzero()


def load_modes(value: str, d: int, spec: PotentialSpec = None) -> ModeSet:
    """--modes ball:R | list:PATH | list:[[n...], ...] | support"""
    text = (value or "").strip()
    if text == "support":
        if spec is None or not spec.is_band_limited:
            raise ConfigError("'support' mode sets need a tabulated potential", {"fields": ["modes"]})
        from ..series import support_domain

        return support_domain(spec, d)

    kind, _, arg = text.partition(":")
    if kind == "ball":
        try:
            radius = float(arg)
        except ValueError:
            raise ConfigError(f"ball radius is not a number: '{arg}'", {"fields": ["modes"]})
        if not math.isfinite(radius) or radius <= 0:
            raise ConfigError("ball radius must be positive", {"fields": ["modes"]})
        return enumerate_ball(d, radius)
    if kind == "list":
        body = arg.strip()
        if not body.startswith("["):
            path = Path(body).expanduser()
            if not path.is_file():
                raise ConfigError(f"mode list file not found: {body}", {"fields": ["modes"]})
            body = path.read_text(encoding="utf-8")
        M = ModeSet.from_json(body, d)
        if M.dim != d:
            raise ConfigError(f"mode list has dimension {M.dim}, expected {d}", {"fields": ["modes", "dim"]})
        return M
    raise ConfigError(f"unknown mode-set rule '{text}'; use ball:R, list:PATH or support", {"fields": ["modes"]})


def _split(value: str, field: str) -> List[str]:
    items = [s.strip() for s in str(value).split(",") if s.strip()]
    if not items:
        raise ConfigError(f"--{field} needs at least one value", {"fields": [field]})
    return items


def parse_int_list(value: str, field: str) -> List[int]:
    """'16,24,32' -> [16, 24, 32]"""
    try:
        return [int(s) for s in _split(value, field)]
    except ValueError:
        raise ConfigError(f"--{field} must be a comma-separated list of integers", {"fields": [field]})


def parse_float_list(value: str, field: str) -> List[float]:
    try:
        values = [float(s) for s in _split(value, field)]
    except ValueError:
        raise ConfigError(f"--{field} must be a comma-separated list of numbers", {"fields": [field]})
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"--{field} contains a non-finite value", {"fields": [field]})
    return values
