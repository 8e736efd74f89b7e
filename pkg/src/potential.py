"""
Interaction potentials given by their Fourier coefficients v̂(k)

Two kinds are supported:
  - gaussian:  v̂(k) = g · exp(-k² / (2 s²)), unbounded support
  - tabulated: finite symmetric support, explicit v̂(0)
Both accept a scale Λ with v̂_Λ(k) := v̂(k/Λ).
"""
import json
import logging
import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from .core.errors import ConfigError, UnboundedSupportError
from .lattice import TWO_PI_SQ, ModeSet, Momentum

logger = logging.getLogger(__name__)

# k/Λ counts as a grid point when every component is within this of an integer
GRID_TOLERANCE = 1e-9


class TabulatedEntry(BaseModel):
    """One tabulated Fourier coefficient"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n: List[int] = Field(..., min_length=1, max_length=3, description="Integer lattice vector")
    v: float = Field(..., ge=0.0, description="v̂(2πn), nonnegative (positive type)")


class PotentialSpec(BaseModel):
    """Fourier-space description of an even, positive-type interaction"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["gaussian", "tabulated"]
    g: Optional[float] = Field(default=None, ge=0.0, description="Gaussian strength (energy)")
    s: Optional[float] = Field(default=None, gt=0.0, description="Gaussian width (momentum)")
    v0: Optional[float] = Field(default=None, ge=0.0, description="Tabulated v̂(0)")
    entries: List[TabulatedEntry] = Field(default_factory=list)
    lambda_scale: float = Field(default=1.0, gt=0.0)

    _table: Dict[Tuple[int, ...], float] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_kind(self) -> "PotentialSpec":
        if self.kind == "gaussian":
            if self.g is None or self.s is None:
                raise ValueError("gaussian potential needs both 'g' and 's'")
            if self.entries or self.v0 is not None:
                raise ValueError("gaussian potential takes no 'v0' or 'entries'")
            return self

        if self.v0 is None:
            raise ValueError("tabulated potential needs 'v0'")
        if self.g is not None or self.s is not None:
            raise ValueError("tabulated potential takes no 'g' or 's'")
        dims = {len(e.n) for e in self.entries}
        if len(dims) > 1:
            raise ValueError(f"entries mix dimensions {sorted(dims)}")
        table: Dict[Tuple[int, ...], float] = {}
        for e in self.entries:
            key = tuple(e.n)
            if not any(key):
                raise ValueError("v̂(0) goes in 'v0', not in 'entries'")
            if key in table and table[key] != e.v:
                raise ValueError(f"conflicting values for n={list(key)}")
            table[key] = e.v
        for key, value in list(table.items()):
            mirror = tuple(-c for c in key)
            if mirror in table and table[mirror] != value:
                raise ValueError(f"v̂ not even: n={list(key)} and n={list(mirror)} differ")
            table[mirror] = value
        self._table = table
        return self

    # ---- construction helpers -------------------------------------------

    @classmethod
    def gaussian(cls, g: float, s: float, lambda_scale: float = 1.0) -> "PotentialSpec":
        return cls(kind="gaussian", g=g, s=s, lambda_scale=lambda_scale)

    @classmethod
    def tabulated(
        cls,
        v0: float,
        values: Dict[Tuple[int, ...], float],
        lambda_scale: float = 1.0,
    ) -> "PotentialSpec":
        """`values` maps integer vectors n to v̂(2πn); negatives are filled in"""
        entries = [TabulatedEntry(n=list(n), v=v) for n, v in sorted(values.items())]
        return cls(kind="tabulated", v0=v0, entries=entries, lambda_scale=lambda_scale)

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialSpec":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            fields = [".".join(str(p) for p in err["loc"]) or "<root>" for err in e.errors()]
            raise ConfigError(
                f"invalid potential: {e.errors()[0]['msg']}",
                {"fields": fields, "errors": [err["msg"] for err in e.errors()]},
            ) from e

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"potential is not valid JSON: {e}", {"fields": ["<root>"]}) from e
        if not isinstance(data, dict):
            raise ConfigError("potential JSON must be an object", {"fields": ["<root>"]})
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return self.model_dump(exclude_none=True)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def with_scale(self, lambda_scale: float) -> "PotentialSpec":
        return self.model_copy(update={"lambda_scale": lambda_scale})

    # ---- queries -----------------------------------------------------------

    @property
    def is_band_limited(self) -> bool:
        return self.kind == "tabulated"

    @property
    def value_at_zero(self) -> float:
        return float(self.g if self.kind == "gaussian" else self.v0)

    def is_identically_zero(self) -> bool:
        if self.kind == "gaussian":
            return self.g == 0.0
        return self.v0 == 0.0 and not any(v > 0 for v in self._table.values())

    def require_nonzero(self) -> "PotentialSpec":
        """Reject v̂ ≡ 0 (used where a potential comes from user input)"""
        if self.is_identically_zero():
            field = "g" if self.kind == "gaussian" else "entries"
            raise ConfigError("potential is identically zero", {"fields": [field]})
        return self

    def table(self) -> Dict[Tuple[int, ...], float]:
        return dict(self._table)


def _tabulated_lookup(spec: PotentialSpec, n: Tuple[int, ...]) -> float:
    if not any(n):
        return float(spec.v0)
    lam = spec.lambda_scale
    if lam == 1.0:
        return spec._table.get(n, 0.0)
    scaled = [c / lam for c in n]
    rounded = tuple(int(round(c)) for c in scaled)
    if any(abs(c - r) > GRID_TOLERANCE for c, r in zip(scaled, rounded)):
        return 0.0
    if not any(rounded):
        return float(spec.v0)
    return spec._table.get(rounded, 0.0)


def vhat(spec: PotentialSpec, k: Momentum) -> float:
    """v̂_Λ(k) = v̂(k/Λ); zero outside the tabulated support"""
    if spec.kind == "gaussian":
        return float(vhat_array(spec, np.asarray([k.n], dtype=np.int64))[0])
    return _tabulated_lookup(spec, k.n)


def vhat_array(spec: PotentialSpec, ns: np.ndarray) -> np.ndarray:
    """Vectorized v̂ over an integer array of lattice vectors, shape (m, d)"""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.ndim == 1:
        ns = ns[:, None]
    if spec.kind == "gaussian":
        n2 = np.einsum("ij,ij->i", ns, ns).astype(float)
        scale = 2.0 * spec.s * spec.s * spec.lambda_scale * spec.lambda_scale
        return spec.g * np.exp(-(TWO_PI_SQ * n2) / scale)
    return np.array([_tabulated_lookup(spec, tuple(int(c) for c in row)) for row in ns], dtype=float)


def support(spec: PotentialSpec, d: Optional[int] = None) -> ModeSet:
    """Nonzero momenta with v̂(k) > 0 (tabulated kind only)"""
    if spec.kind != "tabulated":
        raise UnboundedSupportError("gaussian potentials have unbounded support")
    keys = [n for n, v in spec._table.items() if v > 0]
    if d is None:
        d = len(keys[0]) if keys else (len(spec.entries[0].n) if spec.entries else 1)
    lam = spec.lambda_scale
    if lam != 1.0:
        # v̂_Λ(2πm) = v̂(2πm/Λ) is nonzero only where m = Λn lands on the integer lattice
        scaled = [tuple(int(round(lam * c)) for c in n) for n in keys]
        on_grid = list(dict.fromkeys(m for m in scaled if any(m) and _tabulated_lookup(spec, m) > 0))
        if len(on_grid) < len(keys):
            logger.warning(
                f"scale {lam} maps {len(keys) - len(on_grid)} of {len(keys)} tabulated momenta off the integer lattice"
            )
        keys = on_grid
    return ModeSet(d, tuple(Momentum(n) for n in keys), rule="support")


def potential_cutoff_hint(spec: PotentialSpec, rel: float = 1e-16) -> float:
    """Momentum beyond which a gaussian v̂ drops below rel·g"""
    if spec.kind != "gaussian":
        raise UnboundedSupportError("cutoff hint only applies to gaussian potentials")
    return spec.s * spec.lambda_scale * math.sqrt(2.0 * math.log(1.0 / rel))
