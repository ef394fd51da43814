"""Faces and neighborliness of ``K(A) = conv(+-X_i)`` and ``K+(A) = conv(X_i)``.

A selection ``{s_i X_i : i in S}`` spans a simplicial face when its points
are linearly independent and some functional ``y`` satisfies
``<y, s_i X_i> = 1`` on the selection while every other point of the
polytope has ``<y, x> <= 1 - delta`` with ``delta > 0``.  The largest such
margin is found by LP.

Neighborliness of order ``m`` here covers selections of sizes ``1..m``
inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_array
from .randsrc import RngStream
from .recovery import (
    SignedSupport,
    Verdict,
    _gram_rank_ok,
    all_sparse_recovery_check,
    count_signed_supports,
    dual_certificate_value,
    nsp_signed_value,
    signed_supports,
)
from .linalg import nullspace_basis
from .rip import BudgetExceeded
from .simplex import LinearProgram, LpStatus, solve_lp_free

FACE_TOL = 1e-8

__all__ = [
    "FACE_TOL",
    "FaceQueryResult",
    "NeighborlinessReport",
    "is_face",
    "vertex_census",
    "neighborliness_order",
    "donoho_cross_check",
    "equivalence_verdicts",
]


@dataclass
class FaceQueryResult:
    support: SignedSupport
    is_face: bool
    margin: float
    y: np.ndarray | None
    lp: dict = field(default_factory=dict)
    reason: str = ""

    def to_dict(self) -> dict:
        return {"support": self.support.label(), "is_face": self.is_face, "margin": self.margin,
                "y": None if self.y is None else self.y.tolist(), "lp": self.lp, "reason": self.reason}


def _check_mode(mode):
    if mode not in ("central", "positive"):
        raise ValueError(f"mode must be 'central' or 'positive', got {mode!r}")


def is_face(A, S: SignedSupport, mode: str = "central", tol: float = FACE_TOL) -> FaceQueryResult:
    """Decide whether the selected points span a face, by maximizing the margin.

    In positive mode all signs of ``S`` must be ``+``.  A face needs margin
    above ``tol``.
    """
    _check_mode(mode)
    X = as_array(A)
    n, N = X.shape
    E = list(S.indices)
    if mode == "positive" and any(s < 0 for s in S.signs):
        raise ValueError("positive mode takes all-plus selections")
    P = X[:, E] * S.sign_vector()
    if not _gram_rank_ok(P):
        return FaceQueryResult(S, False, 0.0, None, {}, "selected points are affinely dependent")
    mask = np.ones(N, bool)
    mask[E] = False
    R = X[:, mask].T
    # variables: delta (free), then y (free); maximize delta
    c = np.zeros(n + 1)
    c[0] = -1.0
    A_eq = np.hstack([np.zeros((len(E), 1)), P.T])
    rows = [np.hstack([np.ones((R.shape[0], 1)), R])]
    if mode == "central":
        rows.append(np.hstack([np.ones((R.shape[0], 1)), -R]))
    cap = np.zeros((1, n + 1))
    cap[0, 0] = 1.0
    rows.append(cap)
    A_ub = np.vstack(rows)
    b_ub = np.ones(A_ub.shape[0])
    free = np.ones(n + 1, bool)
    sol = solve_lp_free(LinearProgram.from_inequalities(c, A_ub, b_ub, A_eq, np.ones(len(E)), free))
    if sol.status is LpStatus.INFEASIBLE:
        return FaceQueryResult(S, False, -np.inf, None, sol.to_dict(), "equalities inconsistent")
    if sol.status is not LpStatus.OPTIMAL:
        return FaceQueryResult(S, False, np.nan, None, sol.to_dict(), f"LP {sol.status.value}")
    y = sol.x[1:n + 1].copy()
    # margin recomputed from the functional itself
    margin = 1.0 - float((np.abs(R @ y) if mode == "central" else R @ y).max()) if R.shape[0] else 1.0
    margin = min(margin, 1.0)
    return FaceQueryResult(S, margin > tol, margin, y, sol.to_dict())


def vertex_census(A, mode: str = "central") -> dict:
    """Which of the ``2N`` (central) or ``N`` (positive) points are vertices."""
    _check_mode(mode)
    N = as_array(A).shape[1]
    signs = (1, -1) if mode == "central" else (1,)
    missing = []
    for i in range(N):
        for s in signs:
            S = SignedSupport((i,), (s,))
            if not is_face(A, S, mode).is_face:
                missing.append(S)
    total = N * len(signs)
    return {"mode": mode, "expected": total, "vertices": total - len(missing),
            "all_vertices": not missing, "non_vertices": missing}


@dataclass
class NeighborlinessReport:
    mode: str
    order: int
    vertex_count_full: bool
    failures: list
    examined: int
    budget_exhausted: bool = False

    def to_dict(self) -> dict:
        return {"mode": self.mode, "order": self.order, "vertex_count_full": self.vertex_count_full,
                "failures": [s.label() for s in self.failures], "examined": self.examined,
                "budget_exhausted": self.budget_exhausted}


def neighborliness_order(A, m_max: int, budget: int = 1_000_000, mode: str = "central") -> NeighborlinessReport:
    """Largest ``m* <= m_max`` such that every selection of size ``<= m*`` is a face.

    Sizes are checked in increasing order and the scan stops after the first
    size with a failure, whose failing selections are all reported.  If the
    next size would exceed ``budget`` selections the partial result is
    returned with ``budget_exhausted`` set.
    """
    _check_mode(mode)
    N = as_array(A).shape[1]
    signed = mode == "central"
    examined = 0
    order = 0
    vertex_full = True
    for k in range(1, min(m_max, N) + 1):
        size_cost = math.comb(N, k) * (2 ** k if signed else 1)
        if examined + size_cost > budget:
            return NeighborlinessReport(mode, order, vertex_full, [], examined, True)
        fails = []
        for S in signed_supports(N, m_max, sizes=[k], signed=signed):
            examined += 1
            if not is_face(A, S, mode).is_face:
                fails.append(S)
        if k == 1:
            vertex_full = not fails
        if fails:
            return NeighborlinessReport(mode, order, vertex_full, fails, examined)
        order = k
    return NeighborlinessReport(mode, order, vertex_full, [], examined)


def donoho_cross_check(A, m: int, budget: int = 1_000_000, stream: RngStream | None = None) -> dict:
    """Compare the polytope verdict with the recovery verdict for order ``m``.

    Polytope side: all points are vertices and every selection of size
    ``<= m`` is a face.  Recovery side: every signed support of size
    ``<= m`` is certified.  On disagreement the first disagreeing selection
    and both LP transcripts are returned.
    """
    X = as_array(A)
    N = X.shape[1]
    need = count_signed_supports(N, m)
    if need > budget:
        raise BudgetExceeded(need, budget, "signed supports")
    faces = {}
    for S in signed_supports(N, m):
        faces[S] = is_face(X, S, "central")
    poly_ok = all(f.is_face for f in faces.values())
    rec = all_sparse_recovery_check(X, m, budget, stream, keep_verdicts=True)
    out = {"m": m, "polytope": poly_ok, "recovery": rec.passed, "agree": poly_ok == rec.passed,
           "examined": need, "witness": None}
    for S in signed_supports(N, m):
        if faces[S].is_face != rec.verdicts[S]:
            out["witness"] = {
                "support": S.label(),
                "face": faces[S].to_dict(),
                "certificate": _cert_dict(dual_certificate_value(X, S)),
            }
            out["agree"] = False
            break
    if out["witness"] is None and not poly_ok:
        first = next(S for S in signed_supports(N, m) if not faces[S].is_face)
        out["first_failure"] = first.label()
    return out


def _cert_dict(cert):
    return {"gamma": cert.gamma, "verdict": cert.verdict.value, "lp": cert.lp, "reason": cert.reason}


def equivalence_verdicts(A, m: int, budget: int = 1_000_000, face_tol: float = FACE_TOL) -> dict:
    """Face, dual-certificate and null-space verdicts for every signed support.

    Returns a mapping ``SignedSupport -> (face, certificate, nsp)`` of
    booleans, where ``True`` means the route certifies the selection.
    Boundary cases (certificate or null-space value within 1e-8 of one) are
    reported as ``None`` for that route.
    """
    X = as_array(A)
    N = X.shape[1]
    need = count_signed_supports(N, m)
    if need > budget:
        raise BudgetExceeded(need, budget, "signed supports")
    K = nullspace_basis(X)
    table = {}
    for S in signed_supports(N, m):
        face = is_face(X, S, "central", face_tol).is_face
        cert = dual_certificate_value(X, S).verdict
        nsp = nsp_signed_value(K, S).verdict
        table[S] = (face, _as_bool(cert), _as_bool(nsp))
    return table


def _as_bool(verdict):
    if verdict is Verdict.INDETERMINATE:
        return None
    return verdict is Verdict.CERTIFIED
