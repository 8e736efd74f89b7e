"""
Numerical helpers: compensated summation and log-log power-law fits
"""
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence

import numpy as np

from .errors import FitError


class CompensatedSum:
    """Running sum kept as a list of non-overlapping partials (Shewchuk).

    The represented value is exact; `value()` rounds it once. Merging two
    accumulators is exact as well, so shard partials combined in a fixed
    order reproduce the sequential result bit for bit.
    """

    __slots__ = ("_partials",)

    def __init__(self, initial: float = 0.0):
        self._partials: List[float] = []
        if initial:
            self.add(initial)

    @staticmethod
    def two_sum(u: float, v: float) -> tuple:
        # error-free transformation: u + v == s + t exactly
        s = u + v
        up = s - v
        vpp = s - up
        t = (u - up) + (v - vpp)
        return s, t

    def add(self, x: float) -> None:
        x = float(x)
        kept = []
        for y in self._partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi, lo = self.two_sum(x, y)
            if lo:
                kept.append(lo)
            x = hi
        kept.append(x)
        self._partials = kept

    def add_many(self, values: Iterable[float]) -> None:
        for v in values:
            self.add(v)

    def merge(self, other: "CompensatedSum") -> None:
        for p in other._partials:
            self.add(p)

    def value(self) -> float:
        return math.fsum(self._partials)


def compensated_sum(values: Iterable[float]) -> float:
    """Exactly rounded sum of `values` in the given order"""
    acc = CompensatedSum()
    acc.add_many(values)
    return acc.value()


def row_sums(matrix: np.ndarray) -> List[float]:
    """Exactly rounded sum of each row of a 2-D array"""
    return [math.fsum(row) for row in np.asarray(matrix, dtype=float)]


@dataclass
class PowerLawFit:
    """y ~ prefactor * x**exponent fitted on log-log axes"""

    exponent: float
    prefactor: float
    residuals: List[float] = field(default_factory=list)
    points: int = 0

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "residuals": list(self.residuals),
            "points": self.points,
        }


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """Least-squares line through (log|x|, log|y|)"""
    xs = np.abs(np.asarray(x, dtype=float))
    ys = np.abs(np.asarray(y, dtype=float))
    mask = (xs > 0) & (ys > 0) & np.isfinite(ys)
    if mask.sum() < 2:
        raise FitError(f"power-law fit needs two positive points, got {int(mask.sum())}")
    lx, ly = np.log(xs[mask]), np.log(ys[mask])
    design = np.vstack([lx, np.ones_like(lx)]).T
    coeffs, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope, intercept = float(coeffs[0]), float(coeffs[1])
    resid = ly - (slope * lx + intercept)
    return PowerLawFit(
        exponent=slope,
        prefactor=math.exp(intercept),
        residuals=[float(r) for r in resid],
        points=int(mask.sum()),
    )
