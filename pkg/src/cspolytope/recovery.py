"""l1-minimization recovery and its certificates.

Three independent ways of deciding whether every vector with a given
signed support is the unique minimizer of ``min ||t||_1  s.t.  At = Az``:

* direct trials (:func:`exact_recovery_trial`),
* the minimal sup-norm dual vector (:func:`dual_certificate_value`),
* the null-space property on kernel coordinates (:func:`nsp_signed_value`).

Indices are 0-based throughout.  Signs are +1 / -1.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import randsrc
from .linalg import as_array, jacobi_symmetric_eigen, nullspace_basis
from .randsrc import RngStream
from .rip import BudgetExceeded, colex_supports
from .simplex import FEAS_TOL, LinearProgram, LpStatus, solve_lp, solve_lp_free

RECOVERY_TOL = 1e-7
CERT_TOL = 1e-8
GRAM_RANK_TOL = 1e-10
FALLBACK_TRIALS = 20

__all__ = [
    "SignedSupport",
    "Verdict",
    "RecoveryOutcome",
    "CertificateResult",
    "RecoveryReport",
    "NspReport",
    "LpFailure",
    "signed_supports",
    "count_signed_supports",
    "basis_pursuit",
    "exact_recovery_trial",
    "decode_l1",
    "dual_certificate_value",
    "all_sparse_recovery_check",
    "nsp_signed_value",
    "nullspace_property_check",
]


class LpFailure(RuntimeError):
    """An LP backing a recovery operation did not reach optimality."""

    def __init__(self, status, message=""):
        super().__init__(f"LP ended with status {status.value}{': ' + message if message else ''}")
        self.status = status


@dataclass(frozen=True, order=True)
class SignedSupport:
    """Strictly increasing indices with aligned signs."""

    indices: tuple
    signs: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        sg = tuple(int(s) for s in self.signs)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "signs", sg)
        if len(idx) == 0 or len(idx) != len(sg):
            raise ValueError("need a nonempty support with one sign per index")
        if any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 0:
            raise ValueError(f"indices must be strictly increasing and non-negative: {idx}")
        if any(s not in (-1, 1) for s in sg):
            raise ValueError(f"signs must be +-1: {sg}")

    @property
    def size(self) -> int:
        return len(self.indices)

    def negated(self) -> "SignedSupport":
        return SignedSupport(self.indices, tuple(-s for s in self.signs))

    def sign_vector(self) -> np.ndarray:
        return np.array(self.signs, dtype=float)

    def vector(self, N: int, magnitudes=None) -> np.ndarray:
        """Length-``N`` vector with this sign pattern (unit magnitudes by default)."""
        z = np.zeros(N)
        mags = np.ones(self.size) if magnitudes is None else np.asarray(magnitudes, dtype=float)
        z[list(self.indices)] = self.sign_vector() * mags
        return z

    def label(self, one_based: bool = True) -> str:
        off = 1 if one_based else 0
        return ",".join(f"{i + off}:{'+' if s > 0 else '-'}" for i, s in zip(self.indices, self.signs))

    @classmethod
    def parse(cls, text: str, one_based: bool = True) -> "SignedSupport":
        """Parse ``"3:+,5:-"``; a missing sign means ``+``."""
        pairs = []
        off = 1 if one_based else 0
        for tok in re.split(r"[,\s]+", text.strip()):
            if not tok:
                continue
            m = re.fullmatch(r"(\d+)(?::([+-]))?", tok)
            if not m:
                raise ValueError(f"bad support token {tok!r}")
            pairs.append((int(m.group(1)) - off, -1 if m.group(2) == "-" else 1))
        pairs.sort()
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @classmethod
    def from_vector(cls, z, tol: float = 0.0) -> "SignedSupport":
        z = np.asarray(z, dtype=float)
        idx = np.flatnonzero(np.abs(z) > tol)
        return cls(tuple(idx.tolist()), tuple(np.sign(z[idx]).astype(int).tolist()))


def count_signed_supports(N: int, m: int, signed: bool = True) -> int:
    return sum(math.comb(N, k) * (2 ** k if signed else 1) for k in range(1, m + 1))


def signed_supports(N: int, m: int, sizes=None, signed: bool = True):
    """Signed supports ordered by size, colexicographic support, then sign code.

    The sign code reads position ``k`` (from the smallest index) as bit
    ``k``, with ``-`` as 1, so the all-plus pattern comes first.
    """
    sizes = range(1, m + 1) if sizes is None else sizes
    for k in sizes:
        for sup in colex_supports(N, k):
            idx = tuple(int(i) for i in sup)
            if not signed:
                yield SignedSupport(idx, (1,) * k)
                continue
            for code in range(2 ** k):
                yield SignedSupport(idx, tuple(-1 if (code >> b) & 1 else 1 for b in range(k)))


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    FAILED = "failed"
    INDETERMINATE = "indeterminate"


@dataclass
class RecoveryOutcome:
    solution: np.ndarray
    success: bool | None
    linf_error: float | None
    l1_objective: float
    lp: dict = field(default_factory=dict)


def _lp_stats(sol) -> dict:
    return {"status": sol.status.value, "iterations": sol.iterations,
            "objective": sol.objective, "max_residual": sol.max_residual}


# -- programs --------------------------------------------------------------------

def basis_pursuit(A, y) -> RecoveryOutcome:
    """``min ||t||_1`` subject to ``A t = y`` via the split ``t = u - v``."""
    X = as_array(A)
    y = np.asarray(y, dtype=float).ravel()
    n, N = X.shape
    lp = LinearProgram(np.ones(2 * N), np.hstack([X, -X]), y)
    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:
        raise LpFailure(sol.status, sol.message)
    t = sol.x[:N] - sol.x[N:]
    return RecoveryOutcome(t, None, None, float(np.abs(t).sum()), _lp_stats(sol))


def exact_recovery_trial(A, z) -> RecoveryOutcome:
    """Run basis pursuit on ``y = Az`` and compare with ``z``.

    Success means ``||t - z||_inf <= 1e-7 * max(1, ||z||_inf)``.
    """
    X = as_array(A)
    z = np.asarray(z, dtype=float).ravel()
    out = basis_pursuit(X, X @ z)
    err = float(np.abs(out.solution - z).max()) if z.size else 0.0
    scale = max(1.0, float(np.abs(z).max())) if z.size else 1.0
    out.linf_error = err
    out.success = err <= RECOVERY_TOL * scale
    # z itself is feasible, so the optimum cannot exceed its l1 norm
    assert out.l1_objective <= float(np.abs(z).sum()) + 1e-8 * max(1.0, float(np.abs(z).sum())), \
        "basis pursuit returned a point worse than the feasible input"
    return out


def decode_l1(A, y) -> np.ndarray:
    """``argmin_t ||y - A^T t||_1`` for ``y`` in R^N (one measurement per column).

    LP over ``(t, e)``: minimize ``sum e`` with ``-e <= y - A^T t <= e``.
    """
    X = as_array(A)
    y = np.asarray(y, dtype=float).ravel()
    n, N = X.shape
    if y.size != N:
        raise ValueError(f"expected {N} measurements, got {y.size}")
    c = np.concatenate([np.zeros(n), np.ones(N)])
    I = np.eye(N)
    # y - X^T t <= e   ->  -X^T t - e <= -y ;  X^T t - y <= e  ->  X^T t - e <= y
    A_ub = np.vstack([np.hstack([-X.T, -I]), np.hstack([X.T, -I])])
    b_ub = np.concatenate([-y, y])
    free = np.concatenate([np.ones(n, bool), np.zeros(N, bool)])
    sol = solve_lp_free(LinearProgram.from_inequalities(c, A_ub, b_ub, free=free))
    if sol.status is not LpStatus.OPTIMAL:
        raise LpFailure(sol.status, sol.message)
    return sol.x[:n].copy()


# -- certificates -----------------------------------------------------------------

@dataclass
class CertificateResult:
    support: SignedSupport
    gamma: float
    verdict: Verdict
    w: np.ndarray | None
    lp: dict
    reason: str = ""


def _gram_rank_ok(sub: np.ndarray) -> bool:
    w = jacobi_symmetric_eigen(sub.T @ sub).eigenvalues
    return w[-1] > GRAM_RANK_TOL * max(w[0], np.finfo(float).tiny)


def _classify(value: float) -> Verdict:
    if value < 1.0 - CERT_TOL:
        return Verdict.CERTIFIED
    if value > 1.0 + CERT_TOL:
        return Verdict.FAILED
    return Verdict.INDETERMINATE


def dual_certificate_value(A, S: SignedSupport) -> CertificateResult:
    """``gamma = min ||A_{E^c}^T w||_inf`` subject to ``A_E^T w = s``.

    ``gamma < 1`` certifies that every vector with sign pattern ``S`` is the
    unique basis-pursuit solution; ``gamma > 1`` means none is.
    """
    X = as_array(A)
    n, N = X.shape
    E = list(S.indices)
    if E[-1] >= N:
        raise IndexError("support out of range")
    XE = X[:, E]
    if not _gram_rank_ok(XE):
        return CertificateResult(S, np.inf, Verdict.FAILED, None, {}, "support columns linearly dependent")
    mask = np.ones(N, bool)
    mask[E] = False
    Xc = X[:, mask]
    k = Xc.shape[1]
    # variables: tau >= 0, then w (free)
    c = np.zeros(n + 1)
    c[0] = 1.0
    A_eq = np.hstack([np.zeros((len(E), 1)), XE.T])
    ones = -np.ones((k, 1))
    A_ub = np.vstack([np.hstack([ones, Xc.T]), np.hstack([ones, -Xc.T])])
    free = np.concatenate([[False], np.ones(n, bool)])
    lp = LinearProgram.from_inequalities(c, A_ub, np.zeros(2 * k), A_eq, S.sign_vector(), free)
    sol = solve_lp_free(lp)
    if sol.status is LpStatus.INFEASIBLE:
        return CertificateResult(S, np.inf, Verdict.FAILED, None, sol.to_dict(), "no w with A_E^T w = s")
    if sol.status is not LpStatus.OPTIMAL:
        raise LpFailure(sol.status, sol.message)
    w = sol.x[1:n + 1].copy()
    gamma = float(np.abs(Xc.T @ w).max()) if k else 0.0
    return CertificateResult(S, gamma, _classify(gamma), w, sol.to_dict())


@dataclass
class RecoveryReport:
    m: int
    passed: bool
    examined: int
    failures: list
    indeterminate: list
    verdicts: dict | None = None

    def to_dict(self) -> dict:
        return {"m": self.m, "passed": self.passed, "examined": self.examined,
                "failures": [s.label() for s in self.failures],
                "indeterminate": [s.label() for s in self.indeterminate]}


def _log_uniform_magnitudes(stream, count):
    return 10.0 ** (-3.0 + 6.0 * randsrc.uniform01(stream, count))


def resolve_by_trials(A, S: SignedSupport, stream: RngStream, trials: int = FALLBACK_TRIALS) -> bool:
    """Randomized exact-recovery trials for one signed support."""
    N = as_array(A).shape[1]
    for _ in range(trials):
        z = S.vector(N, _log_uniform_magnitudes(stream, S.size))
        if not exact_recovery_trial(A, z).success:
            return False
    return True


def all_sparse_recovery_check(A, m: int, budget: int = 1_000_000, stream: RngStream | None = None,
                              keep_verdicts: bool = False) -> RecoveryReport:
    """Certify unique recovery for every signed support of size ``<= m``."""
    X = as_array(A)
    N = X.shape[1]
    need = count_signed_supports(N, m)
    if need > budget:
        raise BudgetExceeded(need, budget, "signed supports")
    stream = stream or RngStream(0, 7)
    failures, indet = [], []
    verdicts = {} if keep_verdicts else None
    for S in signed_supports(N, m):
        cert = dual_certificate_value(X, S)
        ok = cert.verdict is Verdict.CERTIFIED
        if cert.verdict is Verdict.INDETERMINATE:
            indet.append(S)
            ok = resolve_by_trials(X, S, stream)
        if not ok:
            failures.append(S)
        if verdicts is not None:
            verdicts[S] = ok
    return RecoveryReport(m, not failures, need, failures, indet, verdicts)


# -- null-space property -------------------------------------------------------------

@dataclass
class NspValue:
    support: SignedSupport
    value: float
    verdict: Verdict
    reason: str = ""


def nsp_signed_value(kernel: np.ndarray, S: SignedSupport) -> NspValue:
    """``max <s, v_E>`` over kernel vectors with ``||v_{E^c}||_1 <= 1``.

    ``kernel`` holds an orthonormal kernel basis as columns.  A value below
    one means ``|<s, v_E>| < ||v_{E^c}||_1`` for every nonzero kernel
    vector.  A kernel vector vanishing off ``E`` fails outright.
    """
    B = np.asarray(kernel, dtype=float)
    N, k = B.shape
    if k == 0:
        return NspValue(S, 0.0, Verdict.CERTIFIED, "trivial kernel")
    E = list(S.indices)
    mask = np.ones(N, bool)
    mask[E] = False
    Bc = B[mask]
    if Bc.shape[0] == 0 or not _gram_rank_ok(Bc):
        return NspValue(S, np.inf, Verdict.FAILED, "kernel vector supported inside E")
    objective = -(S.sign_vector() @ B[E])
    r = Bc.shape[0]
    # variables: alpha (free, k), t >= 0 (r)
    c = np.concatenate([objective, np.zeros(r)])
    I = np.eye(r)
    A_ub = np.vstack([np.hstack([Bc, -I]), np.hstack([-Bc, -I]),
                      np.concatenate([np.zeros(k), np.ones(r)])[None]])
    b_ub = np.concatenate([np.zeros(2 * r), [1.0]])
    free = np.concatenate([np.ones(k, bool), np.zeros(r, bool)])
    sol = solve_lp_free(LinearProgram.from_inequalities(c, A_ub, b_ub, free=free))
    if sol.status is LpStatus.UNBOUNDED:
        return NspValue(S, np.inf, Verdict.FAILED, "unbounded")
    if sol.status is not LpStatus.OPTIMAL:
        raise LpFailure(sol.status, sol.message)
    v = B @ sol.x[:k]
    off = float(np.abs(v[mask]).sum())
    val = float(S.sign_vector() @ v[E])
    value = val / off if off > 0 else (0.0 if val <= 0 else np.inf)
    return NspValue(S, value, _classify(value))


@dataclass
class NspReport:
    m: int
    passed: bool
    mode: str
    kernel_dim: int
    failures: list
    indeterminate: list
    examined: int
    verdicts: dict | None = None

    def to_dict(self) -> dict:
        return {"m": self.m, "passed": self.passed, "mode": self.mode, "kernel_dim": self.kernel_dim,
                "failures": [s.label() for s in self.failures],
                "indeterminate": [s.label() for s in self.indeterminate], "examined": self.examined}


def nullspace_property_check(A, m: int, stream: RngStream | None = None, samples: int = 20_000,
                             keep_verdicts: bool = False) -> NspReport:
    """Null-space property of order ``m``.

    Exhaustive mode (kernel dimension <= 12 and N <= 24) solves one LP per
    signed support of size <= m.  Larger kernels fall back to checking
    ``samples`` random kernel vectors against their own worst supports; that
    mode can only find violations, never certify.
    """
    X = as_array(A)
    N = X.shape[1]
    B = nullspace_basis(X)
    k = B.shape[1]
    if k == 0:
        return NspReport(m, True, "exhaustive", 0, [], [], 0, {} if keep_verdicts else None)
    if k <= 12 and N <= 24:
        failures, indet = [], []
        verdicts = {} if keep_verdicts else None
        count = 0
        for S in signed_supports(N, m):
            res = nsp_signed_value(B, S)
            count += 1
            if res.verdict is Verdict.FAILED:
                failures.append(S)
            elif res.verdict is Verdict.INDETERMINATE:
                indet.append(S)
            if verdicts is not None:
                verdicts[S] = res.verdict is Verdict.CERTIFIED
        return NspReport(m, not failures and not indet, "exhaustive", k, failures, indet, count, verdicts)
    stream = stream or RngStream(0, 11)
    V = B @ randsrc.sample_gaussian(stream, (k, samples))
    mags = np.abs(V)
    top = -np.sort(-mags, axis=0)[:m]
    on = top.sum(axis=0)
    off = mags.sum(axis=0) - on
    bad = np.flatnonzero(on >= off)
    failures = []
    for j in bad[:10]:
        idx = np.argsort(-mags[:, j], kind="stable")[:m]
        failures.append(SignedSupport.from_vector(np.where(np.isin(np.arange(N), idx), V[:, j], 0.0)))
    return NspReport(m, not bad.size, "sampled", k, failures, [], samples)
