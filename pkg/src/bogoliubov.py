"""
Bogoliubov quasiparticle quantities on the torus

Per mode k ≠ 0:
    ε(k) = √(k⁴ + 2k²v̂(k))
    α_k  = v̂(k) / (k² + v̂(k) + ε(k))
    σ_k  = 1/√(1 − α_k²),  γ_k = α_k σ_k

plus the matrix-element functions f(k), g₁(k,ℓ), g₂(k,ℓ) of the rotated
interaction. The formula kernels below are written once and accept either
floats or numpy arrays, so per-index and vectorized evaluation share the
same arithmetic.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from .core.errors import DomainError
from .core.numerics import compensated_sum
from .lattice import TWO_PI_SQ, ModeSet, Momentum
from .potential import PotentialSpec, vhat_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QPCoefficients:
    """Bogoliubov coefficients of a single mode"""

    k: Momentum
    vhat: float
    eps: float
    alpha: float
    sigma: float
    gamma: float

    @property
    def k2(self) -> float:
        return self.k.k2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.k.to_list(),
            "k2": self.k2,
            "vhat": self.vhat,
            "eps": self.eps,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "gamma": self.gamma,
        }


def _dispersion(k2, v):
    root = np.sqrt(k2 * k2 + 2.0 * k2 * v)
    alpha = v / (k2 + v + root)
    sigma = 1.0 / np.sqrt(1.0 - alpha * alpha)
    return root, alpha, sigma, alpha * sigma


def qp_coeffs(spec: PotentialSpec, k: Momentum) -> QPCoefficients:
    """(ε, α, σ, γ) of one nonzero mode"""
    if k.is_zero():
        raise DomainError("Bogoliubov coefficients are undefined at k = 0", {"n": k.to_list()})
    table = QPTable.at(spec, np.asarray([k.n], dtype=np.int64))
    return table.coefficients(0)


@dataclass
class QPTable:
    """Vectorized Bogoliubov coefficients over a list of nonzero momenta"""

    ns: np.ndarray
    k2: np.ndarray
    vhat: np.ndarray
    eps: np.ndarray
    alpha: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    index: Dict[tuple, int] = field(default_factory=dict, repr=False)

    @classmethod
    def at(cls, spec: PotentialSpec, ns: np.ndarray) -> "QPTable":
        ns = np.asarray(ns, dtype=np.int64)
        if ns.ndim == 1:
            ns = ns[:, None]
        n2 = np.einsum("ij,ij->i", ns, ns)
        if np.any(n2 == 0):
            raise DomainError("Bogoliubov coefficients are undefined at k = 0")
        k2 = TWO_PI_SQ * n2.astype(float)
        v = vhat_array(spec, ns)
        eps, alpha, sigma, gamma = _dispersion(k2, v)
        return cls(ns=ns, k2=k2, vhat=v, eps=eps, alpha=alpha, sigma=sigma, gamma=gamma)

    @classmethod
    def of(cls, M: ModeSet, spec: PotentialSpec) -> "QPTable":
        table = cls.at(spec, M.n_array())
        table.index = {m.n: i for i, m in enumerate(M)}
        return table

    def __len__(self) -> int:
        return len(self.k2)

    def coefficients(self, i: int) -> QPCoefficients:
        return QPCoefficients(
            k=Momentum(tuple(int(c) for c in self.ns[i])),
            vhat=float(self.vhat[i]),
            eps=float(self.eps[i]),
            alpha=float(self.alpha[i]),
            sigma=float(self.sigma[i]),
            gamma=float(self.gamma[i]),
        )

    def rows(self) -> List[Dict[str, Any]]:
        """CSV rows: n, k², v̂, ε, α, σ, γ"""
        return [self.coefficients(i).to_dict() for i in range(len(self))]


def qp_table(M: ModeSet, spec: PotentialSpec) -> QPTable:
    return QPTable.of(M, spec)


# ---- e_B --------------------------------------------------------------------


def e_B(M: ModeSet, spec: PotentialSpec) -> float:
    """e_B = −½ Σ_{k∈M} α_k v̂(k)"""
    t = qp_table(M, spec)
    return -0.5 * compensated_sum(t.alpha * t.vhat)


def e_B_alt(M: ModeSet, spec: PotentialSpec) -> float:
    """e_B = ½ Σ_{k∈M} (ε(k) − k² − v̂(k))"""
    t = qp_table(M, spec)
    # ε − k² written as 2k²v̂/(ε + k²) to avoid cancellation at large k
    lift = 2.0 * t.k2 * t.vhat / (t.eps + t.k2)
    return 0.5 * compensated_sum(lift - t.vhat)


def depletion(M: ModeSet, spec: PotentialSpec) -> float:
    """Σ γ_k², the expected number of excitations in the Bogoliubov vacuum"""
    t = qp_table(M, spec)
    return compensated_sum(t.gamma * t.gamma)


# ---- matrix-element kernels -----------------------------------------------


def g1_kernel(vk, vl, vs, sk, gk, sl, gl, ss, gs):
    """g₁ from v̂ and (σ, γ) at k, ℓ and s = k+ℓ"""
    return 0.5 * (
        (vk * (ss * sl + gs * gl) * (sk - gk) + vl * (ss * sk + gs * gk) * (sl - gl))
        - vs * (sl * gk + sk * gl) * (ss - gs)
    )


def g2_kernel(vk, vl, vs, sk, gk, sl, gl, ss, gs):
    """g₂ from v̂ and (σ, γ) at k, ℓ and s = k+ℓ"""
    return -(
        (vk * (gs * sl + ss * gl) * (sk - gk) + vl * (gs * sk + ss * gk) * (sl - gl))
        + vs * (sl * gk + sk * gl) * (ss - gs)
    ) / 6.0


@dataclass(frozen=True)
class ModeSums:
    """ℓ-sums over the mode set that enter f(k)"""

    gamma_sq: float
    vhat_gamma_diff: float

    @classmethod
    def of(cls, table: QPTable) -> "ModeSums":
        return cls(
            gamma_sq=compensated_sum(table.gamma * table.gamma),
            vhat_gamma_diff=compensated_sum(table.vhat * table.gamma * (table.sigma - table.gamma)),
        )


def f_row(
    spec: PotentialSpec,
    table: QPTable,
    sums: ModeSums,
    k: np.ndarray,
    vk: float,
    sk: float,
    gk: float,
) -> float:
    """f(k) for one k given the mode-set table and its ℓ-sums"""
    diff = np.asarray(k, dtype=np.int64)[None, :] - table.ns
    keep = np.any(diff != 0, axis=1)
    v_diff = vhat_array(spec, diff[keep])
    sl, gl = table.sigma[keep], table.gamma[keep]
    exchange = math.fsum(v_diff * gl * ((sk * sk * sl + 2.0 * sk * gl * gk) + sl * gk * gk))
    d = sk - gk
    return (
        -exchange
        - vk * d * d * sums.gamma_sq
        - 2.0 * sk * gk * sums.vhat_gamma_diff
        + 2.0 * vk * gk * d * d * d
        + 0.5 * vk * (sk * sk + gk * gk)
    )


def f_coeff(M: ModeSet, spec: PotentialSpec, k: Momentum) -> float:
    """f(k) with ℓ summed over M (ℓ ≠ k)"""
    c = qp_coeffs(spec, k)
    table = qp_table(M, spec)
    return f_row(spec, table, ModeSums.of(table), np.asarray(k.n), c.vhat, c.sigma, c.gamma)


def _pair_coeffs(spec: PotentialSpec, k: Momentum, l: Momentum):
    s = k + l
    for name, q in (("k", k), ("l", l), ("k+l", s)):
        if q.is_zero():
            raise DomainError(f"matrix element needs {name} ≠ 0", {"k": k.to_list(), "l": l.to_list()})
    return qp_coeffs(spec, k), qp_coeffs(spec, l), qp_coeffs(spec, s)


def g1_coeff(spec: PotentialSpec, k: Momentum, l: Momentum) -> float:
    a, b, c = _pair_coeffs(spec, k, l)
    return float(g1_kernel(a.vhat, b.vhat, c.vhat, a.sigma, a.gamma, b.sigma, b.gamma, c.sigma, c.gamma))


def g2_coeff(spec: PotentialSpec, k: Momentum, l: Momentum) -> float:
    a, b, c = _pair_coeffs(spec, k, l)
    return float(g2_kernel(a.vhat, b.vhat, c.vhat, a.sigma, a.gamma, b.sigma, b.gamma, c.sigma, c.gamma))


# ---- quasiparticle names ----------------------------------------------------


def hqp2_row(
    spec: PotentialSpec,
    table: QPTable,
    sums: ModeSums,
    k: np.ndarray,
    vk: float,
    sk: float,
    gk: float,
) -> float:
    """Two-creation coefficient of the rotated ℍ₂ at k, from the mode-set table"""
    diff = np.asarray(k, dtype=np.int64)[None, :] - table.ns
    keep = np.any(diff != 0, axis=1)
    v_diff = vhat_array(spec, diff[keep])
    sl, gl = table.sigma[keep], table.gamma[keep]
    first = math.fsum(
        v_diff * (sk * sk) * (gl * sl) + v_diff * (2.0 * sk * gk) * (gl * gl) + v_diff * (gk * gk) * (gl * sl)
    )
    d = sk - gk
    return (
        -0.5 * first
        - 0.5 * vk * d * d * sums.gamma_sq
        - sk * gk * sums.vhat_gamma_diff
        + vk * gk * d * d * d
        + 0.25 * vk * (sk * sk + gk * gk)
    )


def hqp2(M: ModeSet, spec: PotentialSpec, k: Momentum) -> float:
    """⟨a*_k a*_{−k}Ω|U ℍ₂ U*Ω⟩ / 2 with ℓ summed over M; equals f(k)/2"""
    c = qp_coeffs(spec, k)
    table = qp_table(M, spec)
    return hqp2_row(spec, table, ModeSums.of(table), np.asarray(k.n), c.vhat, c.sigma, c.gamma)


def hqp1_caa(spec: PotentialSpec, k: Momentum, l: Momentum) -> float:
    """Coefficient of a*_{k+ℓ} a_k a_ℓ in the rotated ℍ₁ (equals g₁)"""
    return g1_coeff(spec, k, l)


def hqp1_aaa(spec: PotentialSpec, k: Momentum, l: Momentum) -> float:
    """Coefficient of a*_k a*_ℓ a*_{−k−ℓ} in the rotated ℍ₁ (equals g₂)"""
    return g2_coeff(spec, k, l)


def exchange_sum(spec: PotentialSpec, table: QPTable, k: np.ndarray) -> float:
    """Σ_{ℓ∈M, ℓ≠k} v̂(k−ℓ) γ_ℓ σ_ℓ"""
    diff = np.asarray(k, dtype=np.int64)[None, :] - table.ns
    keep = np.any(diff != 0, axis=1)
    return math.fsum(vhat_array(spec, diff[keep]) * table.gamma[keep] * table.sigma[keep])
