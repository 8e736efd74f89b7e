"""
Closed-form binding-energy coefficients E₀ᵇ, E₁ᵇ, E₂ᵇ

All lattice sums run over a finite ModeSet in its canonical order. The
k-sums of E₂ᵇ are evaluated row by row (one row per k, vectorized over ℓ);
each row is summed exactly with math.fsum and rows are merged in canonical
order through CompensatedSum, so the reported values do not depend on how
rows are sharded across worker processes.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bogoliubov import ModeSums, QPTable, exchange_sum, f_row, g1_kernel, g2_kernel, hqp2_row, qp_table
from .core.config import get_settings
from .core.errors import ConfigError, DomainError, FitError, UnsupportedError
from .core.metrics import stage_timer
from .core.numerics import CompensatedSum, compensated_sum, fit_power_law
from .diagnostics import DiagnosticsTracker
from .lattice import ModeSet, enumerate_ball, sum_closure
from .potential import PotentialSpec, potential_cutoff_hint, support

logger = logging.getLogger(__name__)

E1_FORMS = ("compact", "e0_minus_kinetic")

# per-row columns produced by RowEvaluator.row
COL_SINGLE, COL_PAIR, COL_T1, COL_T2, COL_T3, COL_T4, COL_LEAD = range(7)


# ---- E₀ᵇ, E₁ᵇ -----------------------------------------------------------------


def e0_binding(spec: PotentialSpec) -> float:
    """E₀ᵇ = v̂(0), unchanged by the scale Λ"""
    return spec.value_at_zero


def e1_binding(M: ModeSet, spec: PotentialSpec, form: str = "compact") -> float:
    """E₁ᵇ on the mode set M in either closed form"""
    t = qp_table(M, spec)
    if form == "compact":
        return -compensated_sum(t.vhat * t.alpha / (1.0 + t.alpha))
    if form == "e0_minus_kinetic":
        e_b = -0.5 * compensated_sum(t.alpha * t.vhat)
        a2 = t.alpha * t.alpha
        return e_b - compensated_sum(t.k2 * a2 / (1.0 - a2))
    raise ConfigError(f"unknown E1 form '{form}'", {"fields": ["form"], "allowed": list(E1_FORMS)})


def e1_binding_leading_order(N: int, spec: PotentialSpec, M: ModeSet, lam: Optional[float] = None) -> float:
    """ΔE ≈ λ(N−1)v̂(0) + (e_B − Σ k²α²/(1−α²))/N, the known 1/N form"""
    if N < 2:
        raise DomainError(f"binding energy needs N ≥ 2, got {N}")
    lam = 1.0 / (N - 1) if lam is None else lam
    return lam * (N - 1) * e0_binding(spec) + e1_binding(M, spec, "e0_minus_kinetic") / N


# ---- summation domain ------------------------------------------------------


def support_domain(spec: PotentialSpec, d: Optional[int] = None) -> ModeSet:
    """supp ∪ sum_closure(supp); every nonvanishing E₂ᵇ term lives here"""
    return sum_closure(support(spec, d))


def check_closure(M: ModeSet, spec: PotentialSpec, tracker: Optional[DiagnosticsTracker] = None) -> bool:
    """True when M covers supp ∪ sum_closure(supp) (always True for gaussian)"""
    if not spec.is_band_limited:
        return True
    needed = support_domain(spec, M.dim)
    if needed.issubset(M):
        return True
    missing = [m.to_list() for m in needed if m not in M]
    logger.warning(f"mode set misses {len(missing)} momenta of supp+supp; E2 sums are truncated")
    if tracker is not None:
        tracker.log_precondition(
            "closure",
            "mode set does not contain supp ∪ sum_closure(supp)",
            context={"missing": missing[:20], "modes": len(M)},
        )
    return False


# ---- E₂ᵇ row evaluation -----------------------------------------------------


@dataclass
class RowEvaluator:
    """Per-k contributions to E₂ᵇ and its quasiparticle assembly"""

    spec: PotentialSpec
    table: QPTable
    sums: ModeSums

    @classmethod
    def of(cls, M: ModeSet, spec: PotentialSpec) -> "RowEvaluator":
        table = qp_table(M, spec)
        if np.any(table.eps < table.k2):
            raise DomainError("dispersion below k²; potential is not of positive type")
        return cls(spec=spec, table=table, sums=ModeSums.of(table))

    def row(self, i: int) -> np.ndarray:
        t = self.table
        k = t.ns[i]
        k2, vk, ek, sk, gk = t.k2[i], t.vhat[i], t.eps[i], t.sigma[i], t.gamma[i]
        out = np.zeros(7)

        pre = k2 * gk * sk / ek
        out[COL_SINGLE] = pre * (k2 * gk * sk - f_row(self.spec, t, self.sums, k, vk, sk, gk))
        out[COL_T1] = -2.0 * k2 * gk * sk * hqp2_row(self.spec, t, self.sums, k, vk, sk, gk) / ek
        out[COL_T2] = k2 * k2 * sk * sk * gk * gk / ek
        out[COL_LEAD] = pre * sk * sk * exchange_sum(self.spec, t, k)

        sums_n = k[None, :] + t.ns
        valid = np.any(sums_n != 0, axis=1)
        if not np.any(valid):
            return out
        s = QPTable.at(self.spec, sums_n[valid])
        vl, sl, gl, el = t.vhat[valid], t.sigma[valid], t.gamma[valid], t.eps[valid]
        g1 = g1_kernel(vk, vl, s.vhat, sk, gk, sl, gl, s.sigma, s.gamma)
        g2 = g2_kernel(vk, vl, s.vhat, sk, gk, sl, gl, s.sigma, s.gamma)
        denom = ek + el + s.eps
        mix = s.sigma * s.sigma + s.gamma * s.gamma

        out[COL_PAIR] = math.fsum(
            (s.k2 * g2 / denom) * (2.0 * s.sigma * s.gamma * g1 / s.eps - 3.0 * mix * g2 / denom)
        )
        out[COL_T3] = 12.0 * math.fsum(s.k2 * s.sigma * s.gamma * (g1 / s.eps) * (g2 / denom))
        ratio = g2 / denom
        out[COL_T4] = -18.0 * math.fsum(s.k2 * mix * ratio * ratio)
        return out

    def rows(self, indices: Sequence[int]) -> List[np.ndarray]:
        return [self.row(int(i)) for i in indices]


def _evaluate_shard(evaluator: RowEvaluator, indices: Sequence[int]) -> List[np.ndarray]:
    return evaluator.rows(indices)


def orbit_representatives(M: ModeSet) -> Tuple[np.ndarray, np.ndarray]:
    """Row indices of one mode per cubic-symmetry orbit and the orbit sizes.

    Valid only for mode sets invariant under signed coordinate permutations
    (balls) combined with an isotropic potential.
    """
    ns = M.n_array()
    keys = [tuple(sorted(abs(int(c)) for c in row)) for row in ns]
    counts: Dict[tuple, int] = {}
    for key in keys:
        counts[key] = counts.get(key, 0) + 1
    reps = [i for i, key in enumerate(keys) if tuple(int(c) for c in ns[i]) == key]
    return np.asarray(reps, dtype=np.int64), np.asarray([counts[keys[i]] for i in reps], dtype=float)


def _row_plan(M: ModeSet, spec: PotentialSpec, use_symmetry: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if use_symmetry and spec.kind == "gaussian" and M.rule.startswith("ball"):
        reps, weights = orbit_representatives(M)
        logger.debug(f"symmetry reduction: {len(M)} rows -> {len(reps)} orbit representatives")
        return reps, weights
    return np.arange(len(M), dtype=np.int64), None


def evaluate_rows(
    M: ModeSet,
    spec: PotentialSpec,
    workers: Optional[int] = None,
    use_symmetry: bool = True,
) -> np.ndarray:
    """Column totals of RowEvaluator.row over M, reduced in canonical order"""
    totals = [CompensatedSum() for _ in range(7)]
    if not len(M):
        return np.zeros(7)
    evaluator = RowEvaluator.of(M, spec)
    indices, weights = _row_plan(M, spec, use_symmetry)
    workers = workers if workers is not None else get_settings().WORKERS

    if workers <= 1 or len(indices) < 2 * workers:
        rows = evaluator.rows(indices)
    else:
        shards = np.array_split(indices, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_evaluate_shard, [evaluator] * len(shards), shards))
        rows = [r for part in parts for r in part]

    for pos, values in enumerate(rows):
        w = 1.0 if weights is None else weights[pos]
        for col in range(7):
            totals[col].add(w * values[col])
    return np.array([acc.value() for acc in totals])


class BindingValue(float):
    """A binding coefficient that carries the closure precondition of its mode set"""

    closure_ok: bool

    def __new__(cls, value: float, closure_ok: bool = True) -> "BindingValue":
        obj = super().__new__(cls, value)
        obj.closure_ok = closure_ok
        return obj


@dataclass
class E2Breakdown:
    """E₂ᵇ by the closed form and by the four quasiparticle terms"""

    closed_form: float
    terms: List[float]
    leading_double_sum: float
    closure_ok: bool = True

    @property
    def qp_total(self) -> float:
        return compensated_sum(self.terms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "closed_form": self.closed_form,
            "qp_terms": list(self.terms),
            "qp_total": self.qp_total,
            "leading_double_sum": self.leading_double_sum,
            "closure_ok": self.closure_ok,
        }


def e2_breakdown(
    M: ModeSet,
    spec: PotentialSpec,
    workers: Optional[int] = None,
    tracker: Optional[DiagnosticsTracker] = None,
    use_symmetry: bool = True,
) -> E2Breakdown:
    closure_ok = check_closure(M, spec, tracker)
    with stage_timer("e2_rows"):
        totals = evaluate_rows(M, spec, workers=workers, use_symmetry=use_symmetry)
    closed = compensated_sum([totals[COL_SINGLE], 6.0 * totals[COL_PAIR]])
    return E2Breakdown(
        closed_form=closed,
        terms=[float(totals[c]) for c in (COL_T1, COL_T2, COL_T3, COL_T4)],
        leading_double_sum=float(totals[COL_LEAD]),
        closure_ok=closure_ok,
    )


def e2_binding(
    M: ModeSet,
    spec: PotentialSpec,
    workers: Optional[int] = None,
    tracker: Optional[DiagnosticsTracker] = None,
) -> BindingValue:
    """E₂ᵇ from the single sum over k and the double sum over (k, ℓ)"""
    b = e2_breakdown(M, spec, workers=workers, tracker=tracker)
    return BindingValue(b.closed_form, closure_ok=b.closure_ok)


def e2_binding_qp_assembly(
    M: ModeSet,
    spec: PotentialSpec,
    workers: Optional[int] = None,
    tracker: Optional[DiagnosticsTracker] = None,
) -> Tuple[BindingValue, List[float]]:
    """E₂ᵇ as the sum of the four quasiparticle terms; returns (total, terms)"""
    b = e2_breakdown(M, spec, workers=workers, tracker=tracker)
    return BindingValue(b.qp_total, closure_ok=b.closure_ok), b.terms


# ---- studies ---------------------------------------------------------------

CSV_COLUMNS = [
    "cutoff",
    "e0b",
    "e1b_compact",
    "e1b_alt",
    "e2b",
    "e2b_qp_term1",
    "e2b_qp_term2",
    "e2b_qp_term3",
    "e2b_qp_term4",
]


@dataclass
class SeriesResult:
    """Binding coefficients at the largest cutoff plus the cutoff sweep"""

    e0_binding: float
    e1_binding: float
    e2_binding: float
    mode_set_summary: Dict[str, Any]
    convergence: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)
    extrapolated: Optional[Dict[str, Dict[str, Optional[float]]]] = None
    rows: List[Dict[str, float]] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "e0_binding": self.e0_binding,
            "e1_binding": self.e1_binding,
            "e2_binding": self.e2_binding,
            "mode_set_summary": self.mode_set_summary,
            "convergence": {k: [list(p) for p in v] for k, v in self.convergence.items()},
            "extrapolated": self.extrapolated,
            "flags": list(self.flags),
        }


def series_row(cutoff: float, M: ModeSet, spec: PotentialSpec, workers: Optional[int] = None,
               tracker: Optional[DiagnosticsTracker] = None) -> Tuple[Dict[str, float], bool]:
    b = e2_breakdown(M, spec, workers=workers, tracker=tracker)
    row = {
        "cutoff": cutoff,
        "e0b": e0_binding(spec),
        "e1b_compact": e1_binding(M, spec, "compact"),
        "e1b_alt": e1_binding(M, spec, "e0_minus_kinetic"),
        "e2b": b.closed_form,
    }
    for n, value in enumerate(b.terms, start=1):
        row[f"e2b_qp_term{n}"] = value
    return row, b.closure_ok


def _tail_fit(points: List[Tuple[float, float]]) -> Dict[str, Optional[float]]:
    (c1, v1), (c2, v2), (c3, v3) = points[-3:]
    try:
        fit = fit_power_law([c1, c2], [v1 - v3, v2 - v3])
    except FitError:
        return {"value": v3, "exponent": None}
    q = -fit.exponent
    if not math.isfinite(q) or q <= 0:
        return {"value": v3, "exponent": q}
    tail = (v3 - v2) * c3 ** (-q) / (c2 ** (-q) - c3 ** (-q))
    return {"value": v3 + tail, "exponent": q}


def convergence_study(
    spec: PotentialSpec,
    cutoffs: Sequence[float],
    d: int = 1,
    workers: Optional[int] = None,
    tracker: Optional[DiagnosticsTracker] = None,
) -> SeriesResult:
    """E₁ᵇ, E₂ᵇ on balls of increasing cutoff, with a power-law tail fit"""
    cutoffs = [float(c) for c in cutoffs]
    if not cutoffs:
        raise ConfigError("at least one cutoff is required", {"fields": ["cutoffs"]})
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigError("cutoffs must be strictly increasing", {"fields": ["cutoffs"]})

    flags: List[str] = []
    rows: List[Dict[str, float]] = []
    for c in cutoffs:
        M = enumerate_ball(d, c)
        logger.info(f"series: cutoff={c} modes={len(M)}")
        row, ok = series_row(c, M, spec, workers=workers, tracker=tracker)
        if not ok and "closure_precondition" not in flags:
            flags.append("closure_precondition")
        rows.append(row)

    convergence = {
        "e1_binding": [(r["cutoff"], r["e1b_compact"]) for r in rows],
        "e2_binding": [(r["cutoff"], r["e2b"]) for r in rows],
    }
    extrapolated = None
    if len(cutoffs) < 3:
        flags.append("fit_skipped")
        logger.warning(f"convergence_study: {len(cutoffs)} cutoff(s), tail fit needs 3")
        if tracker is not None:
            tracker.log_flag("Fit Skipped", "fewer than 3 cutoffs; no extrapolation", severity="LOW")
    else:
        extrapolated = {name: _tail_fit(points) for name, points in convergence.items()}

    last = rows[-1]
    M_last = enumerate_ball(d, cutoffs[-1])
    return SeriesResult(
        e0_binding=last["e0b"],
        e1_binding=last["e1b_compact"],
        e2_binding=last["e2b"],
        mode_set_summary={"rule": M_last.rule, "dim": d, "modes": len(M_last), "cutoffs": cutoffs},
        convergence=convergence,
        extrapolated=extrapolated,
        rows=rows,
        flags=flags,
    )


def series_on_modes(
    spec: PotentialSpec,
    M: ModeSet,
    workers: Optional[int] = None,
    tracker: Optional[DiagnosticsTracker] = None,
) -> SeriesResult:
    """All coefficients on one explicit mode set"""
    row, ok = series_row(math.sqrt(M.max_n2()) * 2.0 * math.pi, M, spec, workers=workers, tracker=tracker)
    return SeriesResult(
        e0_binding=row["e0b"],
        e1_binding=row["e1b_compact"],
        e2_binding=row["e2b"],
        mode_set_summary={"rule": M.rule, "dim": M.dim, "modes": len(M)},
        rows=[row],
        flags=[] if ok else ["closure_precondition"],
    )


@dataclass
class ScalingResult:
    """E₂ᵇ(Λ) for the scaled family v̂(k/Λ)"""

    rows: List[Dict[str, float]]
    exponent: Optional[float]
    tail_exponent: Optional[float]
    leading_exponent: Optional[float]
    sign_at_max: int
    leading_ratio_at_max: float
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.rows,
            "exponent": self.exponent,
            "tail_exponent": self.tail_exponent,
            "leading_exponent": self.leading_exponent,
            "sign_at_max": self.sign_at_max,
            "leading_ratio_at_max": self.leading_ratio_at_max,
            "flags": list(self.flags),
        }


SCALING_COLUMNS = ["lambda_scale", "modes", "e2b", "e2b_over_lambda2", "leading_double_sum", "leading_ratio"]
# E₂ᵇ(Λ) = O(Λ²); fitted exponents outside this window are flagged
SCALING_EXPONENT_WINDOW = (1.8, 2.2)


def scaling_probe(
    spec: PotentialSpec,
    lambdas: Sequence[float],
    d: int = 3,
    rel_cutoff: float = 1e-8,
    workers: Optional[int] = None,
    tracker: Optional[DiagnosticsTracker] = None,
) -> ScalingResult:
    """E₂ᵇ(Λ), E₂ᵇ(Λ)/Λ² and the leading double sum for increasing Λ"""
    if spec.kind != "gaussian":
        raise UnsupportedError("scaling probe needs a smooth (gaussian) potential")
    lambdas = [float(x) for x in lambdas]
    if not lambdas or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError("lambda scales must be strictly increasing", {"fields": ["lambda_scale"]})

    rows = []
    for lam in lambdas:
        scaled = spec.with_scale(lam)
        M = enumerate_ball(d, potential_cutoff_hint(scaled, rel_cutoff))
        logger.info(f"scaling: Λ={lam} modes={len(M)}")
        b = e2_breakdown(M, scaled, workers=workers, tracker=tracker)
        e2 = b.closed_form
        rows.append({
            "lambda_scale": lam,
            "modes": len(M),
            "e2b": e2,
            "e2b_over_lambda2": e2 / (lam * lam),
            "leading_double_sum": b.leading_double_sum,
            "leading_ratio": b.leading_double_sum / e2 if e2 != 0.0 else float("nan"),
        })

    flags: List[str] = []

    def _exponent(xs, ys) -> Optional[float]:
        try:
            return fit_power_law(xs, ys).exponent
        except FitError:
            return None

    xs = [r["lambda_scale"] for r in rows]
    exponent = _exponent(xs, [r["e2b"] for r in rows])
    tail = _exponent(xs[-2:], [r["e2b"] for r in rows[-2:]]) if len(rows) >= 2 else None
    leading = _exponent(xs, [r["leading_double_sum"] for r in rows])
    if exponent is None:
        flags.append("fit_skipped")
    else:
        lo, hi = SCALING_EXPONENT_WINDOW
        if not lo <= exponent <= hi:
            flags.append("exponent_out_of_window")
            logger.warning(f"scaling: fitted exponent {exponent:.3g} outside [{lo}, {hi}]")
            if tracker is not None:
                tracker.log_flag(
                    "Scaling",
                    f"E2 exponent {exponent:.3g} outside [{lo}, {hi}]",
                    severity="MEDIUM",
                    metrics={"exponent": exponent, "tail_exponent": tail},
                )
    last = rows[-1]
    if last["e2b"] < 0:
        flags.append("negative_at_max")
        if tracker is not None:
            tracker.log_flag("Scaling", f"E2 negative at Λ={last['lambda_scale']}", severity="MEDIUM",
                             metrics={"e2b": last["e2b"]})
    return ScalingResult(
        rows=rows,
        exponent=exponent,
        tail_exponent=tail,
        leading_exponent=leading,
        sign_at_max=int(np.sign(last["e2b"])),
        leading_ratio_at_max=last["leading_ratio"],
        flags=flags,
    )
