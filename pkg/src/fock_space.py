"""
Occupation-number bases and sparse second-quantized operators

A basis is an ordered list of modes plus an integer array of occupation
vectors (one row per state). Ladder monomials such as a*_p a*_q a_r a_s are
applied to every basis state at once: the target occupation is located by a
mixed-radix integer key and a sorted-key search, and the bosonic factor is
accumulated as an exact integer product before a single square root, which
makes transposed matrix elements bit-identical.
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .core.config import get_settings
from .core.errors import ConvergenceError, SizeLimitError
from .core.metrics import BASIS_DIMENSION, EIGENSOLVES
from .lattice import ModeSet, Momentum
from .potential import PotentialSpec, vhat_array

logger = logging.getLogger(__name__)

# ladder operator kinds inside a monomial, written left to right
CREATE = "c"
ANNIHILATE = "a"

Monomial = Sequence[Tuple[str, int]]


def enumerate_occupations(
    ns: np.ndarray,
    cap: int,
    sector: bool = True,
    limit: Optional[int] = None,
) -> List[Tuple[int, ...]]:
    """Occupation vectors over the rows of `ns` with Σn ≤ cap.

    With `sector` only vectors of zero total momentum Σ n_i·k_i are kept;
    branches that can no longer return to zero momentum are pruned and the
    last mode is solved for directly.
    """
    ns = np.asarray(ns, dtype=np.int64)
    m = len(ns)
    if m == 0:
        return [()]
    d = ns.shape[1]
    vecs = [tuple(int(c) for c in row) for row in ns]
    # reach[i][c]: largest |component c| among modes i..m-1
    reach = [[0] * d for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        reach[i] = [max(reach[i + 1][c], abs(vecs[i][c])) for c in range(d)]

    out: List[Tuple[int, ...]] = []
    prefix = [0] * m

    def emit():
        out.append(tuple(prefix))
        if limit is not None and len(out) > limit:
            raise SizeLimitError(
                f"occupation basis exceeds the dimension limit {limit}",
                size=len(out),
                limit=limit,
            )

    def rec(i: int, budget: int, P: Tuple[int, ...]) -> None:
        if not sector:
            if i == m:
                emit()
                return
            for n in range(budget + 1):
                prefix[i] = n
                rec(i + 1, budget - n, P)
            prefix[i] = 0
            return

        if i == m - 1:
            k = vecs[i]
            if not any(P):
                prefix[i] = 0
                emit()
            else:
                c = next(c for c in range(d) if k[c] != 0)
                if (-P[c]) % k[c] == 0:
                    n = -P[c] // k[c]
                    if 0 < n <= budget and all(P[j] + n * k[j] == 0 for j in range(d)):
                        prefix[i] = n
                        emit()
            prefix[i] = 0
            return

        k = vecs[i]
        nxt = reach[i + 1]
        for n in range(budget + 1):
            Q = tuple(P[c] + n * k[c] for c in range(d))
            rest = budget - n
            if all(abs(Q[c]) <= rest * nxt[c] for c in range(d)):
                prefix[i] = n
                rec(i + 1, rest, Q)
        prefix[i] = 0

    rec(0, cap, (0,) * d)
    return out


class FockBasis:
    """Ordered occupation basis over `modes` (columns of `states`)"""

    kind = "fock"

    def __init__(
        self,
        modes: Sequence[Momentum],
        states: np.ndarray,
        cap: int,
        excitation_columns: Sequence[int],
        sector: bool = True,
    ):
        self.modes: Tuple[Momentum, ...] = tuple(modes)
        self.cap = int(cap)
        self.sector = sector
        self.excitation_columns = list(excitation_columns)
        states = np.asarray(states, dtype=np.int64).reshape(-1, len(self.modes))

        # graded lexicographic: by number of excitations, then occupation tuple
        n_exc = states[:, self.excitation_columns].sum(axis=1) if self.excitation_columns else np.zeros(len(states), dtype=np.int64)
        cols = [states[:, j] for j in reversed(range(states.shape[1]))]
        order = np.lexsort(cols + [n_exc]) if len(states) else np.zeros(0, dtype=np.int64)
        self.states = states[order]
        self.n_perp = n_exc[order]
        self.total_momenta = self._total_momenta()

        self._radix = self.cap + 1
        self._use_keys = len(self.modes) == 0 or self._radix ** len(self.modes) < 2**62
        if self._use_keys:
            self._powers = np.array([self._radix**j for j in range(len(self.modes))], dtype=np.int64)
            self.keys = self.states @ self._powers if len(self.modes) else np.zeros(len(self.states), dtype=np.int64)
            self._key_order = np.argsort(self.keys, kind="stable")
            self._sorted_keys = self.keys[self._key_order]
        else:
            self._lookup: Dict[bytes, int] = {row.tobytes(): i for i, row in enumerate(self.states)}
        BASIS_DIMENSION.labels(basis=self.kind).set(self.dim)

    # ---- structure ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def __len__(self) -> int:
        return self.dim

    def column(self, k: Momentum) -> int:
        return self.modes.index(k)

    def state(self, i: int) -> Tuple[int, ...]:
        return tuple(int(c) for c in self.states[i])

    def index_of(self, occupation: Sequence[int]) -> int:
        idx = self.lookup(np.asarray([occupation], dtype=np.int64))[0]
        if idx < 0:
            raise KeyError(f"occupation {tuple(occupation)} not in basis")
        return int(idx)

    def _total_momenta(self) -> np.ndarray:
        if not self.modes:
            return np.zeros((len(self.states), 1), dtype=np.int64)
        k = np.array([m.n for m in self.modes], dtype=np.int64)
        return self.states @ k

    def lookup(self, occupations: np.ndarray) -> np.ndarray:
        """Basis ordinals of occupation rows, -1 where absent"""
        occ = np.asarray(occupations, dtype=np.int64)
        if len(occ) == 0:
            return np.zeros(0, dtype=np.int64)
        ok = np.all(occ >= 0, axis=1) & (occ.sum(axis=1) <= self.cap)
        out = np.full(len(occ), -1, dtype=np.int64)
        if self._use_keys:
            keys = occ[ok] @ self._powers if self.n_modes else np.zeros(int(ok.sum()), dtype=np.int64)
            out[ok] = self._search(keys)
        else:
            for pos in np.flatnonzero(ok):
                out[pos] = self._lookup.get(occ[pos].tobytes(), -1)
        return out

    def _search(self, keys: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self._sorted_keys, keys)
        pos_c = np.minimum(pos, len(self._sorted_keys) - 1)
        hit = (pos < len(self._sorted_keys)) & (self._sorted_keys[pos_c] == keys)
        return np.where(hit, self._key_order[pos_c], -1)

    # ---- ladder monomials ----------------------------------------------------

    def apply_monomial(self, ops: Monomial) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(source, target, amplitude) for ops applied to every basis state.

        `ops` lists (kind, column) left to right, so the rightmost operator
        acts first. Targets outside the basis (truncation) are dropped.
        """
        dim = self.dim
        delta = np.zeros(self.n_modes, dtype=np.int64)
        factor = np.ones(dim, dtype=np.int64)
        valid = np.ones(dim, dtype=bool)
        for kind, col in reversed(list(ops)):
            current = self.states[:, col] + delta[col]
            if kind == ANNIHILATE:
                factor *= np.maximum(current, 0)
                valid &= current > 0
                delta[col] -= 1
            else:
                factor *= current + 1
                delta[col] += 1

        src = np.flatnonzero(valid)
        if self._use_keys:
            target_total = self.states[src].sum(axis=1) + delta.sum()
            keys = self.keys[src] + int(delta @ self._powers)
            dst = np.where(target_total <= self.cap, self._search(keys), -1)
        else:
            dst = self.lookup(self.states[src] + delta)
        keep = dst >= 0
        return src[keep], dst[keep], np.sqrt(factor[src[keep]].astype(float))


class ExcitationBasis(FockBasis):
    """Excitation Fock space over a ModeSet, truncated at n_max excitations"""

    kind = "excitation"

    def __init__(self, M: ModeSet, n_max: int, full_space: bool = False, limit: Optional[int] = None):
        limit = limit if limit is not None else get_settings().DIM_LIMIT
        if n_max < 0:
            raise ValueError("n_max must be nonnegative")
        self.mode_set = M
        self.n_max = int(n_max)
        states = enumerate_occupations(M.n_array(), n_max, sector=not full_space, limit=limit)
        super().__init__(
            M.modes,
            np.asarray(states, dtype=np.int64),
            cap=n_max,
            excitation_columns=range(len(M)),
            sector=not full_space,
        )
        logger.debug(f"excitation basis: modes={len(M)} n_max={n_max} dim={self.dim}")

    @property
    def vacuum_index(self) -> int:
        return 0


class NBodyBasis(FockBasis):
    """Fixed-N occupation basis over {0} ∪ M (column 0 is the condensate)"""

    kind = "nbody"

    def __init__(self, M: ModeSet, N: int, full_space: bool = False, limit: Optional[int] = None):
        limit = limit if limit is not None else get_settings().DIM_LIMIT
        if N < 1:
            raise ValueError("particle number must be positive")
        self.mode_set = M
        self.N = int(N)
        exc = enumerate_occupations(M.n_array(), N, sector=not full_space, limit=limit)
        exc_arr = np.asarray(exc, dtype=np.int64).reshape(len(exc), len(M))
        n0 = N - exc_arr.sum(axis=1)
        states = np.hstack([n0[:, None], exc_arr])
        super().__init__(
            (Momentum.zero(M.dim),) + M.modes,
            states,
            cap=N,
            excitation_columns=range(1, len(M) + 1),
            sector=not full_space,
        )
        logger.debug(f"N-body basis: N={N} modes={len(M) + 1} dim={self.dim}")

    @property
    def condensate_index(self) -> int:
        return 0


def basis_dimension(M: ModeSet, cap: int, full_space: bool = False, limit: Optional[int] = None) -> int:
    return len(enumerate_occupations(M.n_array(), cap, sector=not full_space, limit=limit))


# ---- sparse operators ------------------------------------------------------


@dataclass
class SparseHermitian:
    """Real symmetric operator stored as CSR"""

    matrix: sp.csr_matrix
    name: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @classmethod
    def from_parts(
        cls,
        dim: int,
        diagonal: Optional[np.ndarray] = None,
        raising: Optional[sp.spmatrix] = None,
        conserving: Optional[sp.spmatrix] = None,
        name: str = "",
    ) -> "SparseHermitian":
        """diag + R + Rᵀ + ½(C + Cᵀ); R holds the particle-raising part"""
        total = sp.csr_matrix((dim, dim))
        if diagonal is not None:
            total = total + sp.diags(np.asarray(diagonal, dtype=float), 0, shape=(dim, dim), format="csr")
        if raising is not None:
            r = sp.csr_matrix(raising)
            total = total + r + r.T.tocsr()
        if conserving is not None:
            c = sp.csr_matrix(conserving)
            total = total + (c + c.T.tocsr()) * 0.5
        total = total.tocsr()
        total.sum_duplicates()
        total.eliminate_zeros()
        total.sort_indices()
        return cls(total, name=name)

    def hermiticity_residual(self) -> float:
        diff = self.matrix - self.matrix.T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def norm_estimate(self) -> float:
        """‖A‖₁, an upper bound of the spectral norm for symmetric A"""
        if self.nnz == 0:
            return 0.0
        return float(abs(self.matrix).sum(axis=0).max())

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def expectation(self, x: np.ndarray) -> float:
        return float(x @ (self.matrix @ x))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __add__(self, other: "SparseHermitian") -> "SparseHermitian":
        return SparseHermitian((self.matrix + other.matrix).tocsr(), name=f"({self.name}+{other.name})")

    def __sub__(self, other: "SparseHermitian") -> "SparseHermitian":
        return SparseHermitian((self.matrix - other.matrix).tocsr(), name=f"({self.name}-{other.name})")

    def scaled(self, c: float) -> "SparseHermitian":
        return SparseHermitian((self.matrix * c).tocsr(), name=f"{c}*{self.name}")

    def as_operator(self) -> LinearOperator:
        return LinearOperator(self.matrix.shape, matvec=self.matrix.dot, dtype=float)


KetWeight = Callable[[np.ndarray], np.ndarray]


@dataclass
class LadderPart:
    """Matrix elements ⟨dst|Σ coeff·monomial|src⟩ of one operator part, as triplets"""

    basis: FockBasis
    src: np.ndarray
    dst: np.ndarray
    val: np.ndarray

    @classmethod
    def collect(cls, basis: FockBasis, terms: Iterable[Tuple[Monomial, float]]) -> "LadderPart":
        srcs, dsts, vals = [], [], []
        for ops, coeff in terms:
            if coeff == 0.0:
                continue
            src, dst, amp = basis.apply_monomial(ops)
            if len(src):
                srcs.append(src)
                dsts.append(dst)
                vals.append(coeff * amp)
        if not srcs:
            empty = np.zeros(0, dtype=np.int64)
            return cls(basis, empty, empty, np.zeros(0))
        return cls(basis, np.concatenate(srcs), np.concatenate(dsts), np.concatenate(vals))

    def __len__(self) -> int:
        return len(self.val)

    def matrix(self, ket_weight: Optional[KetWeight] = None) -> sp.csr_matrix:
        """Part times w(𝒩⊥) applied on the ket side"""
        vals = self.val
        if ket_weight is not None:
            vals = vals * ket_weight(self.basis.n_perp[self.src].astype(float))
        dim = self.basis.dim
        return sp.coo_matrix((vals, (self.dst, self.src)), shape=(dim, dim)).tocsr()


def _columns(basis: FockBasis) -> Dict[Tuple[int, ...], int]:
    return {m.n: i for i, m in enumerate(basis.modes)}


def _vhat_of(spec, ns: List[Tuple[int, ...]]) -> Dict[Tuple[int, ...], float]:
    if not ns:
        return {}
    values = vhat_array(spec, np.asarray(ns, dtype=np.int64))
    return {n: float(v) for n, v in zip(ns, values)}


def kinetic_diagonal(basis: FockBasis) -> np.ndarray:
    """Σ k² n_k on every basis state"""
    k2 = np.array([m.k2 for m in basis.modes], dtype=float)
    return basis.states @ k2


def vhat_diagonal(basis: FockBasis, spec: PotentialSpec) -> np.ndarray:
    """Σ v̂(k) n_k over the excitation columns"""
    cols = basis.excitation_columns
    v = np.zeros(basis.n_modes)
    if cols:
        v[cols] = vhat_array(spec, np.asarray([basis.modes[c].n for c in cols], dtype=np.int64))
    return basis.states @ v


def pair_creation_part(basis: FockBasis, spec: PotentialSpec) -> LadderPart:
    """½ Σ_k v̂(k) a*_k a*_{−k} over excitation modes"""
    cols = _columns(basis)
    exc = [basis.modes[c] for c in basis.excitation_columns]
    vh = _vhat_of(spec, [k.n for k in exc])
    terms = []
    for k in exc:
        mk = (-k).n
        if mk not in cols:
            logger.warning(f"mode set not closed under negation at n={list(k.n)}; pair term skipped")
            continue
        terms.append((((CREATE, cols[k.n]), (CREATE, cols[mk])), 0.5 * vh[k.n]))
    return LadderPart.collect(basis, terms)


def cubic_part(basis: FockBasis, spec: PotentialSpec) -> LadderPart:
    """Σ v̂(k) a*_k a*_ℓ a_{k+ℓ} with k, ℓ, k+ℓ excitation modes"""
    cols = _columns(basis)
    exc = [basis.modes[c] for c in basis.excitation_columns]
    excset = {k.n for k in exc}
    vh = _vhat_of(spec, [k.n for k in exc])
    terms = []
    for k in exc:
        for l in exc:
            s = (k + l).n
            if s in excset:
                terms.append((((CREATE, cols[k.n]), (CREATE, cols[l.n]), (ANNIHILATE, cols[s])), vh[k.n]))
    return LadderPart.collect(basis, terms)


def quartic_part(basis: FockBasis, spec: PotentialSpec, modes: Optional[Sequence[Momentum]] = None) -> LadderPart:
    """½ Σ_{j≠ℓ} v̂(j−ℓ) a*_j a*_k a_ℓ a_{j+k−ℓ} with all four momenta in `modes`

    Defaults to the excitation modes. Over all basis modes this is the full
    two-body interaction without its q = 0 part.
    """
    cols = _columns(basis)
    modes = [basis.modes[c] for c in basis.excitation_columns] if modes is None else list(modes)
    present = {m.n for m in modes}
    diffs = sorted({(j - l).n for j in modes for l in modes if j != l})
    vh = _vhat_of(spec, diffs)
    terms = []
    for j in modes:
        for l in modes:
            if j == l:
                continue
            q = (j - l).n
            if vh[q] == 0.0:
                continue
            for k in modes:
                s = (j + k - l).n
                if s in present:
                    ops = ((CREATE, cols[j.n]), (CREATE, cols[k.n]), (ANNIHILATE, cols[l.n]), (ANNIHILATE, cols[s]))
                    terms.append((ops, 0.5 * vh[q]))
    return LadderPart.collect(basis, terms)


# ---- eigensolver -----------------------------------------------------------


@dataclass
class Eigenpair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: Optional[int]
    method: str


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def lowest_eigenpair(
    H: SparseHermitian,
    dense_threshold: Optional[int] = None,
    tol: Optional[float] = None,
    maxiter: Optional[int] = None,
    seed: Optional[int] = None,
    residual_tol: Optional[float] = None,
    matrix_free: Optional[bool] = None,
    tracker=None,
) -> Eigenpair:
    """Lowest eigenpair: dense eigh at small dimension, ARPACK Lanczos above"""
    settings = get_settings()
    dense_threshold = settings.DENSE_THRESHOLD if dense_threshold is None else dense_threshold
    tol = settings.EIGEN_TOL if tol is None else tol
    maxiter = settings.EIGEN_MAXITER if maxiter is None else maxiter
    seed = settings.SEED if seed is None else seed
    residual_tol = settings.RESIDUAL_TOL if residual_tol is None else residual_tol
    if matrix_free is None:
        matrix_free = H.nnz > settings.MATRIX_FREE_NNZ

    start = time.perf_counter()
    dim = H.dim
    norm = max(H.norm_estimate(), 1.0)
    iterations: Optional[int] = None

    if dim <= dense_threshold or dim < 3:
        method = "dense"
        w, V = np.linalg.eigh(H.to_dense())
        value, vector = float(w[0]), V[:, 0]
    else:
        method = "lanczos"
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim)
        A = H.as_operator() if matrix_free else H.matrix
        try:
            w, V = eigsh(A, k=1, which="SA", v0=v0, tol=tol, maxiter=maxiter)
        except ArpackNoConvergence as e:
            if len(e.eigenvalues) == 0:
                raise ConvergenceError(
                    f"Lanczos did not converge on dimension {dim}", residual=float("inf"), iterations=maxiter
                ) from e
            w, V = e.eigenvalues, e.eigenvectors
        value, vector = float(w[0]), V[:, 0]

    vector = _fix_sign(vector / np.linalg.norm(vector))
    residual = float(np.linalg.norm(H @ vector - value * vector))
    EIGENSOLVES.labels(method=method).inc()
    duration_ms = (time.perf_counter() - start) * 1000.0
    if tracker is not None:
        tracker.log_solver_run("eigensolve", dim, iterations, residual / norm, duration_ms, tolerance=residual_tol)

    if residual > residual_tol * norm:
        logger.error(f"eigensolver residual {residual:.3e} above {residual_tol:.1e}·‖H‖ (dim={dim})")
        raise ConvergenceError(
            f"lowest eigenpair residual {residual:.3e} exceeds tolerance",
            residual=residual,
            iterations=iterations,
        )
    logger.debug(f"lowest eigenpair ({method}) dim={dim} E={value:.12g} residual={residual:.2e}")
    return Eigenpair(value=value, vector=vector, residual=residual, iterations=iterations, method=method)


def sector_leakage(H: SparseHermitian, basis: FockBasis, seed: int = 0) -> float:
    """‖components of H·x outside the momentum sector of x‖ for random x per sector"""
    moments = [tuple(int(c) for c in row) for row in basis.total_momenta]
    sectors: Dict[Tuple[int, ...], List[int]] = {}
    for i, P in enumerate(moments):
        sectors.setdefault(P, []).append(i)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for P, idx in sectors.items():
        x = np.zeros(basis.dim)
        x[idx] = rng.standard_normal(len(idx))
        y = H @ x
        mask = np.ones(basis.dim, dtype=bool)
        mask[idx] = False
        worst = max(worst, float(np.linalg.norm(y[mask])))
    return worst


def block_structure(H: SparseHermitian, basis: FockBasis) -> bool:
    """True when every stored entry connects states of equal total momentum"""
    coo = H.matrix.tocoo()
    P = basis.total_momenta
    return bool(np.all(P[coo.row] == P[coo.col]))

