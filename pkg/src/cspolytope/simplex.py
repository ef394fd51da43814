"""Dense two-phase revised simplex with Bland's rule.

Problems are in standard form::

    minimize    c @ x
    subject to  M @ x == b,  x >= 0

The basis inverse is kept explicitly, updated by eta (rank-one) pivots and
refactorized from scratch every ``REFACTOR_EVERY`` pivots.  Pricing and the
ratio test follow Bland's smallest-index rule, with one exception: among
tied leaving rows a basic artificial goes first.  Artificials never
re-enter, so this cannot cause cycling, and it avoids the near-singular
bases that arise when many redundant rows tie at zero.  The pivot
sequence is deterministic.

Phase I stops as soon as the artificial sum is within the feasibility
tolerance.  A reduced cost counts as negative only beyond ``COST_TOL``
times the magnitude of the terms it sums.  A column whose only positive
entries fall below the pivot tolerance is skipped until the next pivot
rather than taken as a ray.  Pivots smaller than ``PIVOT_REL`` times the
largest entry of the entering column are treated as zero.  A solution whose
primal residual exceeds ``RESID_TOL`` is reported as a numerical
breakdown, never as optimal.

Tolerances used here are the only ones downstream modules compare against.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numba
import numpy as np

FEAS_TOL = 1e-8
COST_TOL = 1e-8
PIVOT_TOL = 1e-11
DRIVE_TOL = 1e-7
PIVOT_REL = 1e-7
RESID_TOL = 1e-7
REFACTOR_EVERY = 50
MAX_ROWS = 2000
MAX_COLS = 5000

__all__ = [
    "FEAS_TOL",
    "COST_TOL",
    "PIVOT_TOL",
    "LpStatus",
    "LinearProgram",
    "LpSolution",
    "LpSizeError",
    "solve_lp",
    "solve_lp_free",
]


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_BREAKDOWN = "numerical_breakdown"


class LpSizeError(ValueError):
    """Problem exceeds the solver's dense size guard."""


@dataclass
class LinearProgram:
    """``min c@x  s.t.  M@x == b``, ``x >= 0`` except where ``free`` is set.

    ``free`` is only honoured by :func:`solve_lp_free`.
    """

    c: np.ndarray
    M: np.ndarray
    b: np.ndarray
    free: np.ndarray | None = None
    labels: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.M = np.asarray(self.M, dtype=float).reshape(self.b.size, self.c.size)
        if self.free is not None:
            self.free = np.asarray(self.free, dtype=bool).ravel()
            if self.free.size != self.c.size:
                raise ValueError("free mask must match the number of variables")
        if not np.all(np.isfinite(self.b)):
            raise ValueError("right-hand side must be finite")

    @property
    def shape(self):
        return self.M.shape

    @classmethod
    def from_inequalities(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None):
        """Standard-form program from ``A_ub@x <= b_ub`` and ``A_eq@x == b_eq``.

        One slack column is appended per inequality row, after the original
        variables.  ``free`` refers to the original variables only.
        """
        c = np.asarray(c, dtype=float).ravel()
        nvar = c.size
        A_ub = np.zeros((0, nvar)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nvar)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
        A_eq = np.zeros((0, nvar)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nvar)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
        k = A_ub.shape[0]
        M = np.zeros((A_eq.shape[0] + k, nvar + k))
        M[: A_eq.shape[0], :nvar] = A_eq
        M[A_eq.shape[0]:, :nvar] = A_ub
        M[A_eq.shape[0]:, nvar:] = np.eye(k)
        cc = np.concatenate([c, np.zeros(k)])
        ff = None
        if free is not None:
            ff = np.concatenate([np.asarray(free, dtype=bool).ravel(), np.zeros(k, dtype=bool)])
        return cls(cc, M, np.concatenate([b_eq, b_ub]), ff)

    def to_json(self) -> str:
        doc = {
            "format": "cspolytope.lp/1",
            "sense": "min",
            "c": self.c.tolist(),
            "M": self.M.tolist(),
            "b": self.b.tolist(),
            "free": None if self.free is None else self.free.tolist(),
            "labels": self.labels,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "LinearProgram":
        doc = json.loads(text)
        return cls(np.array(doc["c"]), np.array(doc["M"]).reshape(len(doc["b"]), len(doc["c"])),
                   np.array(doc["b"]), doc.get("free"), doc.get("labels"))


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    iterations: int
    max_residual: float
    basis: list = field(default_factory=list)
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "x": self.x.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "max_residual": self.max_residual,
            "message": self.message,
        }


_ST_OPTIMAL, _ST_INFEASIBLE, _ST_UNBOUNDED, _ST_LIMIT, _ST_BREAKDOWN = 0, 1, 2, 3, 4
_STATUS = {
    _ST_OPTIMAL: LpStatus.OPTIMAL,
    _ST_INFEASIBLE: LpStatus.INFEASIBLE,
    _ST_UNBOUNDED: LpStatus.UNBOUNDED,
    _ST_LIMIT: LpStatus.ITERATION_LIMIT,
    _ST_BREAKDOWN: LpStatus.NUMERICAL_BREAKDOWN,
}


@numba.njit(cache=True)
def _refactor(A, basis):
    m = basis.size
    B = np.empty((m, m))
    for i in range(m):
        B[:, i] = A[:, basis[i]]
    if abs(np.linalg.det(B)) == 0.0:
        return np.empty((0, 0)), False
    return np.linalg.inv(B), True


@numba.njit(cache=True)
def _matvec(M, v):
    out = np.zeros(M.shape[0])
    for i in range(M.shape[0]):
        acc = 0.0
        for k in range(M.shape[1]):
            acc += M[i, k] * v[k]
        out[i] = acc
    return out


@numba.njit(cache=True)
def _pivot(Binv, r, u):
    m = u.size
    piv = u[r]
    for k in range(m):
        Binv[r, k] /= piv
    for i in range(m):
        if i != r and u[i] != 0.0:
            f = u[i]
            for k in range(m):
                Binv[i, k] -= f * Binv[r, k]


@numba.njit(cache=True)
def _iterate(A, b, cost, allowed, basis, Binv, max_iter, iters, pivots, phase1, stop_below):
    """Bland-rule iterations on the working basis (modified in place).

    In phase I the loop ends once the objective is at most ``stop_below``;
    in phase II zero-level artificials are pinned at zero.
    """
    m, ncol = A.shape
    y = np.empty(m)
    u = np.empty(m)
    xB = np.empty(m)
    # columns whose only positive pivots are roundoff; cleared after each pivot
    rejected = np.zeros(ncol, dtype=np.bool_)
    while True:
        if phase1:
            obj = 0.0
            for i in range(m):
                acc = 0.0
                for k in range(m):
                    acc += Binv[i, k] * b[k]
                obj += cost[basis[i]] * acc
            if obj <= stop_below:
                return _ST_OPTIMAL, iters, pivots, Binv
        for k in range(m):
            acc = 0.0
            for i in range(m):
                acc += cost[basis[i]] * Binv[i, k]
            y[k] = acc
        q = -1
        for j in range(ncol):
            if not allowed[j] or rejected[j]:
                continue
            dj = cost[j]
            mag = abs(cost[j])
            for k in range(m):
                dj -= y[k] * A[k, j]
                mag += abs(y[k] * A[k, j])
            # relative to the terms summed, so roundoff never prices in
            if dj < -COST_TOL * (1.0 + mag):
                isbasic = False
                for i in range(m):
                    if basis[i] == j:
                        isbasic = True
                        break
                if not isbasic:
                    q = j
                    break
        if q < 0:
            return _ST_OPTIMAL, iters, pivots, Binv
        if iters >= max_iter:
            return _ST_LIMIT, iters, pivots, Binv
        for i in range(m):
            acc = 0.0
            acc2 = 0.0
            for k in range(m):
                acc += Binv[i, k] * A[k, q]
                acc2 += Binv[i, k] * b[k]
            u[i] = acc
            xB[i] = acc2 if acc2 > 0.0 else 0.0
        # a zero-level artificial kept basic must not move off zero; if the
        # entering column touches its row, pivot it out at ratio zero
        r = -1
        for i in range(m):
            if not phase1 and not allowed[basis[i]] and abs(u[i]) > DRIVE_TOL:
                if r < 0 or abs(u[i]) > abs(u[r]):
                    r = i
        if r >= 0:
            _pivot(Binv, r, u)
            basis[r] = q
            pivots += 1
            iters += 1
            rejected[:] = False
            if pivots % REFACTOR_EVERY == 0:
                Binv, ok = _refactor(A, basis)
                if not ok:
                    return _ST_BREAKDOWN, iters, pivots, Binv
            continue
        # pivots tiny relative to the column are roundoff, not structure
        umax = 0.0
        for i in range(m):
            if abs(u[i]) > umax:
                umax = abs(u[i])
        ptol = max(PIVOT_TOL, PIVOT_REL * umax)
        best = np.inf
        for i in range(m):
            if u[i] > ptol:
                ratio = xB[i] / u[i]
                if ratio < best:
                    best = ratio
        if best == np.inf:
            # a genuine ray has no positive entry at all, and phase I is
            # bounded below, so anything else is roundoff: price the next column
            tiny = False
            for i in range(m):
                if u[i] > PIVOT_TOL:
                    tiny = True
                    break
            if phase1 or tiny:
                rejected[q] = True
                continue
            return _ST_UNBOUNDED, iters, pivots, Binv
        # Among tied rows a basic artificial leaves first (largest pivot),
        # since it never re-enters; otherwise Bland's smallest index.
        r = -1
        ra = -1
        lim = best + 1e-12 * (1.0 + abs(best))
        for i in range(m):
            if u[i] > ptol and xB[i] / u[i] <= lim:
                if not allowed[basis[i]]:
                    if ra < 0 or u[i] > u[ra]:
                        ra = i
                elif r < 0 or basis[i] < basis[r]:
                    r = i
        if ra >= 0:
            r = ra
        _pivot(Binv, r, u)
        basis[r] = q
        pivots += 1
        iters += 1
        rejected[:] = False
        if pivots % REFACTOR_EVERY == 0:
            Binv, ok = _refactor(A, basis)
            if not ok:
                return _ST_BREAKDOWN, iters, pivots, Binv


@numba.njit(cache=True)
def _two_phase(A, b, c, basis, n, max_iter, feas_tol):
    """Phase I on artificial columns ``n..`` then phase II on ``c``."""
    m, ncol = A.shape
    colscale = np.ones(n)
    for j in range(n):
        for k in range(m):
            if abs(A[k, j]) > colscale[j]:
                colscale[j] = abs(A[k, j])
    Binv, ok = _refactor(A, basis)
    if not ok:
        return _ST_BREAKDOWN, 0, basis, np.zeros(n), "singular starting basis"
    iters = 0
    pivots = 0
    allowed = np.zeros(ncol, dtype=np.bool_)
    allowed[:n] = True
    if ncol > n:
        cost1 = np.zeros(ncol)
        cost1[n:] = 1.0
        st, iters, pivots, Binv = _iterate(A, b, cost1, allowed, basis, Binv, max_iter, iters, pivots, True, feas_tol)
        if st != _ST_OPTIMAL:
            return st, iters, basis, np.zeros(n), "phase I"
        xB = _matvec(Binv, b)
        infeas = 0.0
        for i in range(m):
            if basis[i] >= n:
                infeas += xB[i]
        if infeas > feas_tol:
            return _ST_INFEASIBLE, iters, basis, np.zeros(n), "phase I optimum above tolerance"
        # pivot zero-level artificials out where a structural column allows it;
        # rows with none are redundant and keep their artificial at zero
        for r in range(m):
            if basis[r] < n:
                continue
            row = np.zeros(n)
            for k in range(m):
                if Binv[r, k] != 0.0:
                    row += Binv[r, k] * A[k, :n]
            # largest eligible entry; roundoff-sized entries mean a redundant row
            q = -1
            big = DRIVE_TOL
            for j in range(n):
                if abs(row[j]) > big * colscale[j]:
                    isbasic = False
                    for i in range(m):
                        if basis[i] == j:
                            isbasic = True
                            break
                    if not isbasic:
                        q = j
                        big = abs(row[j]) / colscale[j]
            if q >= 0:
                u = _matvec(Binv, A[:, q].copy())
                _pivot(Binv, r, u)
                basis[r] = q
                pivots += 1
        Binv, ok = _refactor(A, basis)
        if not ok:
            return _ST_BREAKDOWN, iters, basis, np.zeros(n), "refactorization failed"
    cost2 = np.zeros(ncol)
    cost2[:n] = c
    st, iters, pivots, Binv = _iterate(A, b, cost2, allowed, basis, Binv, max_iter, iters, pivots, False, -np.inf)
    x = np.zeros(n)
    if st != _ST_BREAKDOWN:
        xB = _matvec(Binv, b)
        for i in range(m):
            j = basis[i]
            if j < n:
                x[j] = xB[i] if (xB[i] > 0.0 or xB[i] < -1e-9) else 0.0
    return st, iters, basis, x, ""


def _crash_basis(A):
    """Rows that already own a positive unit column, mapped to that column."""
    nz = A != 0.0
    cols = np.flatnonzero(nz.sum(axis=0) == 1)
    rows = nz[:, cols].argmax(axis=0)
    good = A[rows, cols] > 0.0
    rows, cols = rows[good], cols[good]
    # smallest column index wins for each row
    uniq, first = np.unique(rows, return_index=True)
    return dict(zip(uniq.tolist(), cols[first].tolist()))


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` in standard form (all variables non-negative)."""
    M0, b0, c0 = lp.M, lp.b, lp.c
    m, n = M0.shape
    if m > MAX_ROWS or n > MAX_COLS:
        raise LpSizeError(f"LP of size {m}x{n} exceeds the {MAX_ROWS}x{MAX_COLS} guard")
    if max_iter is None:
        max_iter = 50 * (m + n)
    if m == 0:
        if np.any(c0 < -COST_TOL):
            return LpSolution(LpStatus.UNBOUNDED, np.zeros(n), -np.inf, 0, 0.0)
        return LpSolution(LpStatus.OPTIMAL, np.zeros(n), 0.0, 0, 0.0)

    flip = np.where(b0 < 0, -1.0, 1.0)
    A = M0 * flip[:, None]
    b = b0 * flip
    feas_tol = FEAS_TOL * (1.0 + np.abs(b0).max())

    owners = _crash_basis(A)
    art_rows = [i for i in range(m) if i not in owners]
    Afull = np.zeros((m, n + len(art_rows)))
    Afull[:, :n] = A
    basis = np.empty(m, dtype=np.int64)
    for i, j in owners.items():
        basis[i] = j
    for t, i in enumerate(art_rows):
        Afull[i, n + t] = 1.0
        basis[i] = n + t

    code, iters, basis, x, msg = _two_phase(Afull, b, c0, basis, n, max_iter, feas_tol)
    status = _STATUS[code]
    resid = float(np.abs(M0 @ x - b0).max())
    if status is LpStatus.OPTIMAL and resid > RESID_TOL * (1.0 + np.abs(b0).max()):
        status = LpStatus.NUMERICAL_BREAKDOWN
        msg = f"primal residual {resid:.3e} after termination"
    if status is LpStatus.OPTIMAL:
        obj = float(c0 @ x)
    elif status is LpStatus.UNBOUNDED:
        obj = -np.inf
    else:
        obj = np.nan
    return LpSolution(status, x, obj, int(iters), resid, basis.tolist(), msg)


def solve_lp_free(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve with the variables flagged in ``lp.free`` unrestricted in sign.

    Each free variable ``x_j`` is replaced by ``x_j^+ - x_j^-`` and the split
    point is recombined afterwards.
    """
    free = lp.free if lp.free is not None else np.zeros(lp.c.size, dtype=bool)
    idx = np.flatnonzero(free)
    M = np.hstack([lp.M, -lp.M[:, idx]])
    c = np.concatenate([lp.c, -lp.c[idx]])
    sol = solve_lp(LinearProgram(c, M, lp.b), max_iter=max_iter)
    x = sol.x[: lp.c.size].copy()
    x[idx] -= sol.x[lp.c.size:]
    obj = float(lp.c @ x) if sol.status is not LpStatus.UNBOUNDED else -np.inf
    resid = float(np.abs(lp.M @ x - lp.b).max()) if lp.b.size else 0.0
    return LpSolution(sol.status, x, obj, sol.iterations, resid, sol.basis, sol.message)
