"""Restricted isometry constants and the chaos quantities ``A_m, B_m, C_m``.

Supports are 0-based column index tuples.  Exhaustive scans visit the
size-``m`` supports in colexicographic order and break ties towards the
first support visited, so witnesses are reproducible.

Only supports of size exactly ``m`` are scanned for ``delta_m``: by Cauchy
interlacing, the extreme eigenvalues of any principal submatrix of a Gram
matrix lie between those of the larger matrix, so smaller supports never
increase the maximum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import randsrc
from .linalg import as_array, gram_stack, jacobi_symmetric_eigen
from .randsrc import RngStream

CANDES_THRESHOLD = math.sqrt(2.0) - 1.0
DEFAULT_BUDGET = 2_000_000
CHUNK = 20_000

__all__ = [
    "CANDES_THRESHOLD",
    "BudgetExceeded",
    "RipEntry",
    "RipReport",
    "ChaosStats",
    "colex_supports",
    "isometry_constant_exact",
    "isometry_constant_sampled",
    "rip_report",
    "chaos_statistics",
    "chaos_sup_monte_carlo",
    "am_lower_estimate",
    "rip_decomposition_check",
    "halfsplit_identity_check",
    "candes_criterion",
]


class BudgetExceeded(RuntimeError):
    """An exhaustive enumeration would exceed its budget."""

    def __init__(self, required, budget, what="supports"):
        super().__init__(f"{what}: {required} required, budget is {budget}")
        self.required = required
        self.budget = budget


@dataclass
class RipEntry:
    m: int
    delta: float
    witness_support: tuple
    witness_side: str
    method: str
    supports_examined: int


@dataclass
class RipReport:
    matrix: dict
    entries: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix,
                "entries": {str(m): asdict(e) for m, e in sorted(self.entries.items())}}


@dataclass
class ChaosStats:
    m: int
    A_m: float
    B_m: float
    C_m: float
    witness_A: tuple
    witness_B: tuple
    supports_examined: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def colex_supports(N: int, m: int) -> np.ndarray:
    """All ``m``-subsets of ``range(N)`` in colexicographic order, shape ``(C(N,m), m)``."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    count = math.comb(N, m)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(N), m)),
                       dtype=np.int64, count=count * m)
    sup = flat.reshape(count, m)
    order = np.lexsort(sup.T)
    return sup[order]


def _check_budget(N, m, budget):
    need = math.comb(N, m)
    if need > budget:
        raise BudgetExceeded(need, budget)
    return need


def _scan(X, m, budget, stat):
    """Apply ``stat(G_stack) -> (B, k) array`` to every size-m Gram; column-wise max/argmax."""
    N = X.shape[1]
    _check_budget(N, m, budget)
    G = X.T @ X
    sup = colex_supports(N, m)
    best = None
    arg = None
    for start in range(0, sup.shape[0], CHUNK):
        block = sup[start:start + CHUNK]
        vals = stat(gram_stack(G, block))
        idx = vals.argmax(axis=0)
        top = vals[idx, np.arange(vals.shape[1])]
        if best is None:
            best, arg = top, block[idx]
        else:
            better = top > best
            best = np.where(better, top, best)
            arg = np.where(better[:, None], block[idx], arg)
    return best, [tuple(int(i) for i in a) for a in arg], sup.shape[0]


def _extremes(Gs):
    w = jacobi_symmetric_eigen(Gs).eigenvalues
    return w[:, 0], w[:, -1]


def isometry_constant_exact(A, m: int, budget: int = DEFAULT_BUDGET) -> RipEntry:
    """Exact ``delta_m(A / sqrt(n))`` by scanning every size-``m`` support.

    Raises
    ------
    BudgetExceeded
        If ``C(N, m) > budget``; ``.required`` holds the needed count.
    """
    X = as_array(A)
    n, N = X.shape
    if not 1 <= m <= N:
        raise ValueError(f"m must lie in [1, {N}]")

    def stat(Gs):
        lmax, lmin = _extremes(Gs)
        return np.column_stack([lmax / n - 1.0, 1.0 - lmin / n])

    best, arg, count = _scan(X, m, budget, stat)
    side = 0 if best[0] >= best[1] else 1
    return RipEntry(m, float(max(best[side], 0.0)), arg[side], ("upper", "lower")[side], "exact", count)


def _random_supports(stream: RngStream, N: int, m: int, count: int) -> np.ndarray:
    """``count`` uniform random ``m``-subsets (rows sorted)."""
    out = np.empty((count, m), dtype=np.int64)
    filled = 0
    while filled < count:
        need = count - filled
        draw = np.minimum((randsrc.uniform01(stream, (need, m)) * N).astype(np.int64), N - 1)
        draw.sort(axis=1)
        ok = np.all(np.diff(draw, axis=1) > 0, axis=1) if m > 1 else np.ones(need, bool)
        good = draw[ok]
        out[filled:filled + good.shape[0]] = good
        filled += good.shape[0]
    return out


def isometry_constant_sampled(A, m: int, trials: int, stream: RngStream) -> RipEntry:
    """Lower bound on ``delta_m`` from ``trials`` uniformly random supports.

    When ``trials >= C(N, m)`` the scan is exhaustive and equals the exact value.
    """
    X = as_array(A)
    n, N = X.shape
    if trials < 1:
        raise ValueError("trials must be positive")
    if trials >= math.comb(N, m):
        ex = isometry_constant_exact(A, m, budget=trials)
        ex.method = "sampled"
        return ex
    sup = _random_supports(stream, N, m, trials)
    G = X.T @ X
    best, arg = -np.inf, None
    for start in range(0, trials, CHUNK):
        block = sup[start:start + CHUNK]
        lmax, lmin = _extremes(gram_stack(G, block))
        vals = np.maximum(lmax / n - 1.0, 1.0 - lmin / n)
        i = int(vals.argmax())
        if vals[i] > best:
            best = float(vals[i])
            side = "upper" if lmax[i] / n - 1.0 >= 1.0 - lmin[i] / n else "lower"
            arg = tuple(int(k) for k in block[i])
    return RipEntry(m, max(best, 0.0), arg, side, "sampled", trials)


def rip_report(A, ms, budget: int = DEFAULT_BUDGET) -> RipReport:
    meta = A.metadata() if hasattr(A, "metadata") else {"n": as_array(A).shape[0], "N": as_array(A).shape[1]}
    rep = RipReport(meta)
    for m in ms:
        rep.entries[m] = isometry_constant_exact(A, m, budget)
    return rep


def chaos_statistics(A, m: int, budget: int = DEFAULT_BUDGET) -> ChaosStats:
    """``A_m``, ``B_m``, ``C_m`` by exhaustive support scan.

    For ``z`` supported on ``E``, ``|Az|^2 - sum z_i^2 |X_i|^2`` is the
    quadratic form of the hollow Gram matrix ``G_E - diag(G_E)``, so
    ``B_m^2`` is the largest spectral norm of those hollow blocks, and
    ``A_m^2`` is the largest top eigenvalue of the ``G_E``.
    """
    X = as_array(A)
    N = X.shape[1]
    if not 1 <= m <= N:
        raise ValueError(f"m must lie in [1, {N}]")
    idx = np.arange(m)

    def stat(Gs):
        top = jacobi_symmetric_eigen(Gs).eigenvalues[:, 0]
        H = Gs.copy()
        H[:, idx, idx] = 0.0
        wh = jacobi_symmetric_eigen(H).eigenvalues
        return np.column_stack([top, np.maximum(np.abs(wh[:, 0]), np.abs(wh[:, -1]))])

    best, arg, count = _scan(X, m, budget, stat)
    C = float(np.sqrt(np.einsum("ij,ij->j", X, X)).max())
    return ChaosStats(m, float(math.sqrt(max(best[0], 0.0))), float(math.sqrt(max(best[1], 0.0))), C,
                      arg[0], arg[1], count)


def _random_sparse_units(stream, N, m, count):
    sup = _random_supports(stream, N, m, count)
    z = randsrc.sample_gaussian(stream, (count, m))
    z /= np.sqrt(np.sum(z * z, axis=1))[:, None]
    return sup, z


def chaos_sup_monte_carlo(A, m: int, samples: int, stream: RngStream) -> float:
    """``max |(|Az|^2 - sum z_i^2 |X_i|^2)|`` over random unit ``m``-sparse ``z``.

    A lower estimate of ``B_m^2``.
    """
    X = as_array(A)
    N = X.shape[1]
    G = X.T @ X
    best = 0.0
    for start in range(0, samples, CHUNK):
        cnt = min(CHUNK, samples - start)
        sup, z = _random_sparse_units(stream, N, m, cnt)
        cols = X[:, sup]                      # (n, cnt, m)
        Az = np.einsum("ncm,cm->cn", cols, z)
        diag = np.einsum("cm,cm->c", z * z, np.diagonal(G)[sup])
        val = np.abs(np.einsum("cn,cn->c", Az, Az) - diag)
        best = max(best, float(val.max()))
    return best


def am_lower_estimate(A, m: int, trials: int, stream: RngStream) -> float:
    """Certified lower bound on ``A_m`` from random supports.

    Each sampled support contributes ``sqrt(lambda_max(G_E))``; the support
    holding the longest column is always included, so the bound is at
    least ``C_m``.
    """
    X = as_array(A)
    N = X.shape[1]
    m = min(m, N)
    G = X.T @ X
    longest = int(np.argmax(np.diagonal(G)))
    sup = _random_supports(stream, N, m, trials)
    best = float(G[longest, longest])
    for start in range(0, trials, CHUNK):
        top = jacobi_symmetric_eigen(gram_stack(G, sup[start:start + CHUNK])).eigenvalues[:, 0]
        best = max(best, float(top.max()))
    return math.sqrt(best)


def rip_decomposition_check(A, m: int, budget: int = DEFAULT_BUDGET) -> dict:
    """Check ``delta_m(A/sqrt n) <= B_m^2/n + max_i | |X_i|^2/n - 1 |``."""
    X = as_array(A)
    n = X.shape[0]
    delta = isometry_constant_exact(X, m, budget).delta
    B = chaos_statistics(X, m, budget).B_m
    h2 = float(np.abs(np.einsum("ij,ij->j", X, X) / n - 1.0).max())
    rhs = B * B / n + h2
    return {"m": m, "delta": delta, "B2_over_n": B * B / n, "h2_deviation": h2, "rhs": rhs,
            "holds": bool(delta <= rhs + 1e-10)}


def halfsplit_identity_check(vectors) -> dict:
    """Both sides of ``sum_{i!=j} <x_i,x_j> = 4 * 2^-K sum_E sum_{i in E, j notin E} <x_i,x_j>``.

    ``vectors`` has one vector per row; ``K <= 16``.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    K = V.shape[0]
    if K > 16:
        raise ValueError(f"K = {K} too large for 2^K enumeration (max 16)")
    G = V @ V.T
    lhs = float(G.sum() - np.trace(G))
    masks = np.arange(2 ** K)
    S = ((masks[:, None] >> np.arange(K)) & 1).astype(float)
    cross = np.einsum("ei,ij,ej->e", S, G, 1.0 - S)
    rhs = float(4.0 * cross.sum() / 2 ** K)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs),
            "scale": float(np.trace(G))}


def candes_criterion(delta_2m: float) -> bool:
    """True iff ``delta_2m < sqrt(2) - 1`` (strict)."""
    if delta_2m < 0:
        raise ValueError("isometry constants are non-negative")
    return bool(delta_2m < CANDES_THRESHOLD)
