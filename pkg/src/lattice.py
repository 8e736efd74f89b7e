"""
Momentum lattice (2πZ)^d

Momenta are stored as integer vectors n with k = 2πn; every k², k+l and
membership test is integer arithmetic, and the (2π)² scale enters only when
a float is requested.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .core.config import get_settings
from .core.errors import ConfigError, SizeLimitError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
TWO_PI_SQ = TWO_PI * TWO_PI
SUPPORTED_DIMENSIONS = (1, 2, 3)


def _lattice_component(c) -> int:
    try:
        value = int(c)
    except (TypeError, ValueError, OverflowError) as e:
        raise ConfigError(f"momentum component {c!r} is not an integer") from e
    if value != c:
        raise ConfigError(f"momentum component {c!r} is not an integer")
    return value


@dataclass(frozen=True, order=True)
class Momentum:
    """A lattice momentum k = 2π·n"""

    n: Tuple[int, ...]

    def __post_init__(self):
        if len(self.n) not in SUPPORTED_DIMENSIONS:
            raise ConfigError(f"momentum dimension must be 1, 2 or 3, got {len(self.n)}")
        object.__setattr__(self, "n", tuple(_lattice_component(c) for c in self.n))

    @classmethod
    def of(cls, *components: int) -> "Momentum":
        return cls(tuple(components))

    @classmethod
    def zero(cls, d: int) -> "Momentum":
        return cls((0,) * d)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def n2(self) -> int:
        """|n|², exact"""
        return sum(c * c for c in self.n)

    @property
    def k2(self) -> float:
        """k² = (2π)²|n|²"""
        return TWO_PI_SQ * self.n2

    @property
    def norm(self) -> float:
        return TWO_PI * math.sqrt(self.n2)

    def k_vector(self) -> np.ndarray:
        return TWO_PI * np.asarray(self.n, dtype=float)

    def is_zero(self) -> bool:
        return not any(self.n)

    def __neg__(self) -> "Momentum":
        return Momentum(tuple(-c for c in self.n))

    def __add__(self, other: "Momentum") -> "Momentum":
        return Momentum(tuple(a + b for a, b in zip(self.n, other.n)))

    def __sub__(self, other: "Momentum") -> "Momentum":
        return Momentum(tuple(a - b for a, b in zip(self.n, other.n)))

    def to_list(self) -> List[int]:
        return list(self.n)


@dataclass(frozen=True)
class ModeSet:
    """Finite, negation-closed set of nonzero momenta in lexicographic order"""

    dim: int
    modes: Tuple[Momentum, ...]
    rule: str = field(default="explicit", compare=False)
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMENSIONS:
            raise ConfigError(f"dimension must be 1, 2 or 3, got {self.dim}")
        ordered = tuple(sorted(self.modes))
        if len(set(ordered)) != len(ordered):
            raise ConfigError("mode set contains duplicate momenta")
        for m in ordered:
            if m.dim != self.dim:
                raise ConfigError(f"momentum {m.n} does not have dimension {self.dim}")
            if m.is_zero():
                raise ConfigError("mode set must not contain the zero momentum")
        members = set(ordered)
        for m in ordered:
            if -m not in members:
                raise ConfigError(f"mode set not closed under negation: {m.n} without {(-m).n}")
        object.__setattr__(self, "modes", ordered)
        object.__setattr__(self, "_index", {m: i for i, m in enumerate(ordered)})

    @classmethod
    def explicit(cls, d: int, ns: Iterable[Sequence[int]], close: bool = True) -> "ModeSet":
        """Build from integer vectors; `close` adds the missing negatives"""
        momenta = {Momentum(tuple(n)) for n in ns}
        momenta.discard(Momentum.zero(d))
        if close:
            momenta |= {-m for m in momenta}
        return cls(d, tuple(momenta), rule="explicit")

    @classmethod
    def empty(cls, d: int) -> "ModeSet":
        return cls(d, (), rule="explicit")

    def __iter__(self) -> Iterator[Momentum]:
        return iter(self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def __contains__(self, k: Momentum) -> bool:
        return k in self._index

    def index(self, k: Momentum) -> int:
        return self._index[k]

    def n_array(self) -> np.ndarray:
        """Integer array of shape (len, dim)"""
        if not self.modes:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.array([m.n for m in self.modes], dtype=np.int64)

    def union(self, other: "ModeSet") -> "ModeSet":
        if other.dim != self.dim:
            raise ConfigError("cannot join mode sets of different dimension")
        return ModeSet(self.dim, tuple(set(self.modes) | set(other.modes)), rule="union")

    def issubset(self, other: "ModeSet") -> bool:
        return all(m in other for m in self.modes)

    def max_n2(self) -> int:
        return max((m.n2 for m in self.modes), default=0)

    def total(self) -> Tuple[int, ...]:
        """Σ n over the set (zero for every valid set)"""
        return tuple(int(c) for c in self.n_array().sum(axis=0)) if self.modes else (0,) * self.dim

    def to_json(self) -> str:
        return json.dumps([m.to_list() for m in self.modes])

    @classmethod
    def from_json(cls, text: str, d: Optional[int] = None) -> "ModeSet":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"mode set is not valid JSON: {e}") from e
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ConfigError("mode set JSON must be an array of integer vectors")
        if d is None:
            if not rows:
                raise ConfigError("dimension required for an empty mode set")
            d = len(rows[0])
        return cls(d, tuple(Momentum(tuple(r)) for r in rows), rule="explicit")


def enumerate_ball(d: int, cutoff: float, limit: Optional[int] = None) -> ModeSet:
    """All nonzero k = 2πn with |k| ≤ cutoff, lexicographic on n"""
    if d not in SUPPORTED_DIMENSIONS:
        raise ConfigError(f"dimension must be 1, 2 or 3, got {d}")
    if not cutoff > 0:
        raise ConfigError(f"cutoff must be positive, got {cutoff}")
    limit = limit if limit is not None else get_settings().MODE_LIMIT

    radius = cutoff / TWO_PI
    nmax = int(math.floor(radius + 1e-12))
    volume = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius ** d
    if volume > 2 * limit:
        raise SizeLimitError(
            f"ball of radius {cutoff} holds about {int(volume)} modes (limit {limit})",
            size=int(volume),
            limit=limit,
        )

    bound = cutoff * cutoff
    modes = []
    for n in itertools.product(range(-nmax, nmax + 1), repeat=d):
        n2 = sum(c * c for c in n)
        if n2 == 0 or TWO_PI_SQ * n2 > bound:
            continue
        modes.append(Momentum(n))
        if len(modes) > limit:
            raise SizeLimitError(
                f"ball of radius {cutoff} exceeds the mode limit {limit}",
                size=len(modes),
                limit=limit,
            )
    logger.debug(f"enumerate_ball(d={d}, cutoff={cutoff}) -> {len(modes)} modes")
    return ModeSet(d, tuple(modes), rule=f"ball:{cutoff}")


def sum_closure(S: ModeSet) -> ModeSet:
    """S together with every nonzero pairwise sum a+b, a, b ∈ S"""
    out = set(S.modes)
    for a in S.modes:
        for b in S.modes:
            c = a + b
            if not c.is_zero():
                out.add(c)
    return ModeSet(S.dim, tuple(out), rule="sum_closure")


def ball_covering(S: ModeSet) -> ModeSet:
    """Smallest enumerate_ball containing S"""
    if not len(S):
        return S
    return enumerate_ball(S.dim, TWO_PI * math.sqrt(S.max_n2()) * (1 + 1e-12))
