"""Small dense kernels: Gram submatrices, cyclic Jacobi, kernel bases.

The Jacobi routine accepts a single symmetric matrix or a stack of them
(shape ``(B, k, k)``) and rotates the whole stack in lock-step, which is how
the isometry-constant scans push thousands of tiny Gram matrices through it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
RANK_TOL = 1e-10

__all__ = [
    "ConvergenceError",
    "SymEigenResult",
    "as_array",
    "gram_submatrix",
    "gram_stack",
    "jacobi_symmetric_eigen",
    "operator_norm_sym",
    "nullspace_basis",
]


class ConvergenceError(RuntimeError):
    pass


@dataclass
class SymEigenResult:
    """Eigenvalues sorted in descending order (last axis for stacks)."""

    eigenvalues: np.ndarray
    vectors: np.ndarray | None
    sweeps: int


def as_array(A) -> np.ndarray:
    """Entries of a :class:`~cspolytope.ensembles.SensingMatrix` or array."""
    return np.asarray(getattr(A, "entries", A), dtype=float)


def gram_submatrix(A, E) -> np.ndarray:
    """``G[a, b] = <X_E[a], X_E[b]>`` for the columns listed in ``E`` (0-based)."""
    X = as_array(A)
    E = np.asarray(E, dtype=int).ravel()
    if E.size == 0:
        raise ValueError("support must be nonempty")
    if E.min() < 0 or E.max() >= X.shape[1]:
        raise IndexError(f"support {E.tolist()} out of range for {X.shape[1]} columns")
    sub = X[:, E]
    return sub.T @ sub


def gram_stack(G_full: np.ndarray, supports: np.ndarray) -> np.ndarray:
    """Principal submatrices of the full Gram matrix for each row of ``supports``."""
    return G_full[supports[:, :, None], supports[:, None, :]]


def jacobi_symmetric_eigen(M, vectors: bool = False, tol: float = OFFDIAG_TOL,
                           max_sweeps: int = MAX_SWEEPS) -> SymEigenResult:
    """Eigenvalues of a symmetric matrix (or stack) by cyclic Jacobi sweeps.

    Sweeps stop once the off-diagonal Frobenius mass of every matrix is at
    most ``tol * ||M||_F``.  With ``vectors=True`` the accumulated rotations
    are returned as columns, ordered like the eigenvalues.

    Raises
    ------
    ValueError
        Input not square or not symmetric to 1e-12 relative.
    ConvergenceError
        Sweep cap reached.
    """
    M = np.array(M, dtype=float)
    single = M.ndim == 2
    if single:
        M = M[None]
    if M.ndim != 3 or M.shape[1] != M.shape[2]:
        raise ValueError(f"expected square matrices, got shape {M.shape}")
    B, k, _ = M.shape
    norms = np.sqrt(np.einsum("bij,bij->b", M, M))
    asym = np.abs(M - M.transpose(0, 2, 1)).max(axis=(1, 2)) if k else np.zeros(B)
    if np.any(asym > 1e-12 * np.maximum(norms, np.finfo(float).tiny)):
        raise ValueError("matrix is not symmetric")
    M = 0.5 * (M + M.transpose(0, 2, 1))
    V = np.broadcast_to(np.eye(k), (B, k, k)).copy() if vectors else np.zeros((0, k, k))
    sweeps = _jacobi_sweeps(M, V, tol * norms, max_sweeps, vectors)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    if not vectors:
        V = None
    w = np.einsum("bii->bi", M).copy()
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    if V is not None:
        V = np.take_along_axis(V, order[:, None, :], axis=2)
    if single:
        return SymEigenResult(w[0], None if V is None else V[0], sweeps)
    return SymEigenResult(w, V, sweeps)


@numba.njit(cache=True)
def _jacobi_sweeps(M, V, limits, max_sweeps, vectors):
    """Rotate each matrix of the stack to diagonal form in place.

    Returns the largest sweep count used, or -1 if any matrix hit the cap.
    """
    B, k, _ = M.shape
    worst = 0
    for b in range(B):
        A = M[b]
        sweeps = 0
        while True:
            off = 0.0
            for i in range(k):
                for j in range(k):
                    if i != j:
                        off += A[i, j] * A[i, j]
            if math.sqrt(off) <= limits[b]:
                break
            if sweeps >= max_sweeps:
                return -1
            sweeps += 1
            for p in range(k - 1):
                for q in range(p + 1, k):
                    apq = A[p, q]
                    if abs(apq) <= 1e-150:
                        continue
                    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(k):
                        arp = A[r, p]
                        arq = A[r, q]
                        A[r, p] = c * arp - s * arq
                        A[r, q] = s * arp + c * arq
                    for r in range(k):
                        apr = A[p, r]
                        aqr = A[q, r]
                        A[p, r] = c * apr - s * aqr
                        A[q, r] = s * apr + c * aqr
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    if vectors:
                        W = V[b]
                        for r in range(k):
                            vrp = W[r, p]
                            vrq = W[r, q]
                            W[r, p] = c * vrp - s * vrq
                            W[r, q] = s * vrp + c * vrq
        if sweeps > worst:
            worst = sweeps
    return worst


def operator_norm_sym(M) -> float:
    """Spectral norm of a symmetric matrix, ``max |eigenvalue|``."""
    w = jacobi_symmetric_eigen(M).eigenvalues
    if w.size == 0:
        return 0.0
    return float(max(abs(w[0]), abs(w[-1])))


def nullspace_basis(A) -> np.ndarray:
    """Orthonormal basis of ``ker(A)``, one basis vector per column.

    Rank is counted at ``1e-10`` times the largest singular value.  Singular
    values within a factor 100 of that threshold trigger a warning.
    """
    X = as_array(A)
    n, N = X.shape
    if N == 0:
        return np.zeros((0, 0))
    _, sv, Vt = np.linalg.svd(X, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    thresh = RANK_TOL * smax
    rank = int(np.sum(sv > thresh)) if smax > 0 else 0
    near = sv[(sv > thresh / 100) & (sv < thresh * 100)]
    if near.size:
        warnings.warn("singular values close to the rank threshold; kernel dimension is fragile",
                      RuntimeWarning, stacklevel=2)
    return Vt[rank:].T.copy()
