"""
Exact diagonalization of the N-boson torus Hamiltonian on M ∪ {0}

    H = Σ k² a*_k a_k + (λ/2) Σ_q v̂(q) a*_{k+q} a*_{ℓ−q} a_ℓ a_k

The q = 0 part equals λ v̂(0) N(N−1)/2 on the fixed-N space; it is added
analytically so that the eigensolver only sees the O(1) remainder.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bogoliubov import e_B
from .core.config import get_settings
from .core.errors import ConfigError, FitError
from .core.metrics import stage_timer
from .core.numerics import fit_power_law
from .diagnostics import DiagnosticsTracker
from .fock_space import NBodyBasis, SparseHermitian, kinetic_diagonal, lowest_eigenpair, quartic_part
from .lattice import ModeSet
from .potential import PotentialSpec
from .series import check_closure, e0_binding, e1_binding, e2_binding

logger = logging.getLogger(__name__)

# design matrices with a larger 2-norm condition number are refused
MAX_CONDITION = 1e12
MIN_LAMBDA_SPREAD = 4.0


def mean_field_constant(N: int, lam: float, spec: PotentialSpec) -> float:
    """λ v̂(0) N(N−1)/2"""
    return 0.5 * lam * spec.value_at_zero * N * (N - 1)


def build_nbody_hamiltonian(
    N: int,
    lam: float,
    spec: PotentialSpec,
    M: ModeSet,
    full_space: bool = False,
    include_mean_field: bool = True,
    tracker: Optional[DiagnosticsTracker] = None,
) -> Tuple[NBodyBasis, SparseHermitian]:
    """Basis and Hamiltonian of N bosons on the modes M ∪ {0}"""
    check_closure(M, spec, tracker)
    basis = NBodyBasis(M, N, full_space=full_space)
    with stage_timer("nbody_assembly"):
        interaction = quartic_part(basis, spec, modes=basis.modes)
        diagonal = kinetic_diagonal(basis)
        if include_mean_field:
            diagonal = diagonal + mean_field_constant(N, lam, spec)
        H = SparseHermitian.from_parts(
            basis.dim,
            diagonal=diagonal,
            conserving=interaction.matrix() * lam,
            name=f"H_N{N}",
        )
    logger.debug(f"N-body Hamiltonian N={N} λ={lam:.6g}: dim={basis.dim} nnz={H.nnz}")
    return basis, H


def ground_energy(
    N: int,
    lam: float,
    spec: PotentialSpec,
    M: ModeSet,
    full_space: bool = False,
    tracker: Optional[DiagnosticsTracker] = None,
) -> float:
    """Lowest eigenvalue of H(N, λ) with the q = 0 constant added back"""
    _, H = build_nbody_hamiltonian(N, lam, spec, M, full_space=full_space, include_mean_field=False, tracker=tracker)
    with stage_timer("nbody_eigensolve"):
        pair = lowest_eigenpair(H, tracker=tracker)
    return pair.value + mean_field_constant(N, lam, spec)


@dataclass
class BindingPoint:
    N: int
    lam: float
    E_N: float
    E_Nm1: float

    @property
    def delta_E(self) -> float:
        return self.E_N - self.E_Nm1

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "lambda": self.lam, "E_N": self.E_N, "E_Nm1": self.E_Nm1, "deltaE": self.delta_E}


def binding_point(
    N: int,
    spec: PotentialSpec,
    M: ModeSet,
    full_space: bool = False,
    tracker: Optional[DiagnosticsTracker] = None,
) -> BindingPoint:
    if N < 2:
        raise ConfigError(f"binding energy needs N ≥ 2, got {N}", {"fields": ["N_list"]})
    lam = 1.0 / (N - 1)
    e_n = ground_energy(N, lam, spec, M, full_space=full_space, tracker=tracker)
    e_nm1 = ground_energy(N - 1, lam, spec, M, full_space=full_space, tracker=tracker)
    logger.info(f"N={N}: ΔE={e_n - e_nm1:.12g}")
    return BindingPoint(N=N, lam=lam, E_N=e_n, E_Nm1=e_nm1)


def binding_energy(
    N: int,
    spec: PotentialSpec,
    M: ModeSet,
    full_space: bool = False,
    tracker: Optional[DiagnosticsTracker] = None,
) -> float:
    """ΔE = E(N, λ_N v) − E(N−1, λ_N v) at the common coupling λ_N = 1/(N−1)"""
    return binding_point(N, spec, M, full_space=full_space, tracker=tracker).delta_E


def _binding_task(args) -> BindingPoint:
    N, spec, M, full_space = args
    return binding_point(N, spec, M, full_space=full_space)


def binding_sweep(
    N_list: Sequence[int],
    spec: PotentialSpec,
    M: ModeSet,
    workers: Optional[int] = None,
    full_space: bool = False,
    tracker: Optional[DiagnosticsTracker] = None,
) -> List[BindingPoint]:
    """ΔE for every N, computed concurrently and returned in N order"""
    workers = workers if workers is not None else get_settings().WORKERS
    Ns = sorted(set(int(n) for n in N_list))
    if workers <= 1 or len(Ns) < 2:
        return [binding_point(N, spec, M, full_space=full_space, tracker=tracker) for N in Ns]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        points = list(pool.map(_binding_task, [(N, spec, M, full_space) for N in Ns]))
    return sorted(points, key=lambda p: p.N)


# ---- fits ------------------------------------------------------------------


@dataclass
class BindingFit:
    """Least-squares fit of ΔE(N) against powers of λ_N"""

    N_list: List[int]
    delta_E: List[float]
    lambdas: List[float]
    coefficients: List[float]
    covariance: List[List[float]]
    residuals: List[float]
    condition: float
    residual_exponent: Optional[float] = None
    residual_reference: str = "fit"
    targets: Dict[str, float] = field(default_factory=dict)

    @property
    def b(self) -> List[float]:
        return self.coefficients

    def comparison(self) -> Dict[str, Dict[str, float]]:
        out = {}
        for j, b in enumerate(self.coefficients):
            key = f"e{j}_binding"
            if key in self.targets:
                target = self.targets[key]
                out[key] = {
                    "fitted": b,
                    "target": target,
                    "delta": b - target,
                    "relative": (b - target) / target if target != 0 else float("nan"),
                }
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N_list": self.N_list,
            "lambda": self.lambdas,
            "deltaE": self.delta_E,
            "coefficients": self.coefficients,
            "covariance": self.covariance,
            "residuals": self.residuals,
            "condition": self.condition,
            "residual_exponent": self.residual_exponent,
            "residual_reference": self.residual_reference,
            "targets": self.targets,
            "comparison": self.comparison(),
        }


def fit_binding_points(
    lambdas: Sequence[float],
    delta_E: Sequence[float],
    order: int = 2,
    targets: Optional[Dict[str, float]] = None,
    N_list: Optional[Sequence[int]] = None,
) -> BindingFit:
    """Fit ΔE = Σ_{j≤order} bⱼ λʲ and measure the residual exponent.

    With targets for every coefficient the residual is taken against the
    target polynomial, otherwise against the fitted one.
    """
    lam = np.asarray(lambdas, dtype=float)
    y = np.asarray(delta_E, dtype=float)
    n, p = len(lam), order + 1
    if n < order + 2:
        raise FitError(f"fit of order {order} needs at least {order + 2} points, got {n}")
    spread = float(lam.max() / lam.min()) if lam.min() > 0 else float("inf")
    if spread < MIN_LAMBDA_SPREAD:
        raise FitError(f"λ_N spans only a factor {spread:.3g}; need at least {MIN_LAMBDA_SPREAD:g}", condition=None)

    design = np.vander(lam, p, increasing=True)
    condition = float(np.linalg.cond(design))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        logger.error(f"binding fit design matrix ill-conditioned: cond={condition:.3e}")
        raise FitError("design matrix is ill-conditioned; widen the N list", condition=condition)

    coeffs, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    fitted_resid = y - design @ coeffs
    dof = n - p
    sigma2 = float(fitted_resid @ fitted_resid) / dof if dof > 0 else 0.0
    covariance = sigma2 * np.linalg.inv(design.T @ design)

    targets = dict(targets or {})
    keys = [f"e{j}_binding" for j in range(p)]
    if all(k in targets for k in keys):
        reference = "targets"
        model = sum(targets[k] * lam**j for j, k in enumerate(keys))
        resid = y - model
    else:
        reference = "fit"
        resid = fitted_resid

    exponent = None
    try:
        exponent = fit_power_law(lam, resid).exponent
    except FitError:
        logger.warning("residuals vanish; residual exponent not measured")

    return BindingFit(
        N_list=[int(v) for v in N_list] if N_list is not None else [int(round(1.0 / v + 1.0)) for v in lam],
        delta_E=[float(v) for v in y],
        lambdas=[float(v) for v in lam],
        coefficients=[float(v) for v in coeffs],
        covariance=covariance.tolist(),
        residuals=[float(v) for v in resid],
        condition=condition,
        residual_exponent=exponent,
        residual_reference=reference,
        targets=targets,
    )


def series_targets(spec: PotentialSpec, M: ModeSet, order: int = 2) -> Dict[str, float]:
    """E₀ᵇ, E₁ᵇ, E₂ᵇ from the closed forms on the same mode set"""
    targets = {"e0_binding": e0_binding(spec)}
    if order >= 1:
        targets["e1_binding"] = e1_binding(M, spec)
    if order >= 2:
        targets["e2_binding"] = e2_binding(M, spec)
    return targets


def fit_binding_series(
    N_list: Sequence[int],
    spec: PotentialSpec,
    M: ModeSet,
    order: int = 2,
    workers: Optional[int] = None,
    full_space: bool = False,
    tracker: Optional[DiagnosticsTracker] = None,
) -> Tuple[BindingFit, List[BindingPoint]]:
    """ED sweep over N followed by the λ_N polynomial fit"""
    if len(set(N_list)) < order + 2:
        raise FitError(f"fit of order {order} needs at least {order + 2} distinct N")
    with stage_timer("oracle_sweep"):
        points = binding_sweep(N_list, spec, M, workers=workers, full_space=full_space, tracker=tracker)
    targets = series_targets(spec, M, order) if spec.is_band_limited else {}
    fit = fit_binding_points(
        [p.lam for p in points],
        [p.delta_E for p in points],
        order=order,
        targets=targets,
        N_list=[p.N for p in points],
    )
    if fit.residual_exponent is not None and abs(fit.residual_exponent - (order + 1)) > 0.5 and tracker is not None:
        tracker.log_flag(
            "Residual Exponent",
            f"residual exponent {fit.residual_exponent:.3f} far from {order + 1}",
            severity="MEDIUM",
            metrics={"exponent": fit.residual_exponent},
        )
    return fit, points


def energy_offset_probe(
    N_list: Sequence[int],
    spec: PotentialSpec,
    M: ModeSet,
    full_space: bool = False,
    tracker: Optional[DiagnosticsTracker] = None,
) -> Dict[str, Any]:
    """E(N, λ_N) − N e_H − e_B(M) against λ_N; the fitted exponent should be near 1"""
    e_H = 0.5 * spec.value_at_zero
    e_b = e_B(M, spec)
    rows = []
    for N in sorted(set(N_list)):
        lam = 1.0 / (N - 1)
        energy = ground_energy(N, lam, spec, M, full_space=full_space, tracker=tracker)
        rows.append({"N": N, "lambda": lam, "E_N": energy, "offset": energy - N * e_H - e_b})
    try:
        exponent: Optional[float] = fit_power_law([r["lambda"] for r in rows], [r["offset"] for r in rows]).exponent
    except FitError:
        exponent = None
    return {"e_H": e_H, "e_B": e_b, "rows": rows, "exponent": exponent}
