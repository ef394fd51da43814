"""Calculators for the probabilistic bounds, plus Monte Carlo checks against them.

The universal constants ``C`` and ``c`` in these bounds are not known
numerically.  Every calculator takes them from :class:`BoundConstants`,
which defaults to ``C = c = 1``; treat results as shapes, not guarantees.
All logarithms are natural.

Constants fitted from Monte Carlo pilots live in
``data/fitted_constants.json`` and are loaded with :func:`fitted_constants`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from . import randsrc
from .randsrc import RngStream

__all__ = [
    "BoundConstants",
    "fitted_constants",
    "uup_bound",
    "rip_bound_rhs",
    "neighborliness_threshold",
    "bernstein_tail",
    "weibull_tail_bound",
    "mixed_tail_bound",
    "thin_shell_prob",
    "max_norm_prob",
    "am_lower_bound",
    "moment_growth_check",
    "conjugate_norm",
    "empirical_weibull_tail",
    "empirical_bernstein_tail",
    "fit_weibull_constant",
]


@dataclass
class BoundConstants:
    """Configuration shared by the calculators.

    ``xi`` defaults to ``psi * K + K_prime``; set ``xi_override`` to use a
    value directly.
    """

    C_big: float = 1.0
    c_small: float = 1.0
    c0: float = 3.33
    c1: float = 0.33
    C0_max: float = 1.0
    theta: float = 0.2
    theta_prime: float = (math.sqrt(2.0) - 1.0) / 2.0
    K: float = 1.0
    K_prime: float = 1.0
    psi: float = 1.0
    r: float = 1.0
    xi_override: float | None = None

    def __post_init__(self):
        for name in ("C_big", "c_small", "c0", "c1", "C0_max", "theta", "theta_prime", "psi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.K < 1 or self.K_prime < 1:
            raise ValueError("K and K_prime must be at least 1")
        if not 1.0 <= self.r <= 2.0:
            raise ValueError(f"r must lie in [1, 2], got {self.r}")
        if not self.theta_prime < 1:
            raise ValueError("theta_prime must lie in (0, 1)")
        if self.xi_override is not None and not self.xi_override > 0:
            raise ValueError("xi_override must be positive")

    @property
    def xi(self) -> float:
        if self.xi_override is not None:
            return float(self.xi_override)
        return self.psi * self.K + self.K_prime

    def replace(self, **kw) -> "BoundConstants":
        d = asdict(self)
        d.update(kw)
        return BoundConstants(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["xi"] = self.xi
        return d


def fitted_constants() -> dict:
    """Frozen constants from the Monte Carlo pilots."""
    text = resources.files("cspolytope").joinpath("data/fitted_constants.json").read_text()
    return json.loads(text)


def uup_bound(n: int, N: int, m: int, consts: BoundConstants, p_max_norm: float = 0.0) -> dict:
    """Admissibility of ``m`` and the resulting bound ``B_m^2 <= C xi^2 theta n``.

    ``m`` is admissible when ``m log^(2/r)(2N/(theta m)) <= theta^2 n``.
    ``p_max_norm`` is the caller's value of ``P(max|X_i| >= K' sqrt n)``.
    """
    theta = consts.theta
    if not 0 < theta < 0.25:
        raise ValueError(f"theta must lie in (0, 1/4), got {theta}")
    if m < 1:
        raise ValueError("m must be at least 1")
    L = math.log(2.0 * N / (theta * m))
    lhs = m * max(L, 0.0) ** (2.0 / consts.r)
    rhs = theta * theta * n
    fail = math.exp(-consts.c_small * consts.K ** consts.r * math.sqrt(m) * L) + p_max_norm
    return {"admissible": lhs <= rhs, "lhs": lhs, "rhs": rhs,
            "bound_on_Bm2": consts.C_big * consts.xi ** 2 * theta * n,
            "failure_prob": fail}


def rip_bound_rhs(n: int, N: int, m: int, consts: BoundConstants, p_max_norm: float = 0.0,
                  p_shell: float = 0.0) -> dict:
    """``C xi^2 sqrt(m/n) log^(1/r)(eN / (m sqrt(m/n))) + theta'`` and its probability.

    ``vacuous`` is set when the log argument is at most one or the bound
    reaches one.
    """
    if not 1 <= m <= min(n, N):
        raise ValueError("need 1 <= m <= min(n, N)")
    ratio = math.sqrt(m / n)
    arg = math.e * N / (m * ratio)
    L = math.log(arg)
    first = consts.C_big * consts.xi ** 2 * ratio * max(L, 0.0) ** (1.0 / consts.r)
    rhs = first + consts.theta_prime
    prob = 1.0 - consts.C_big * math.exp(-consts.c_small * consts.K ** consts.r * math.sqrt(m) * L) \
        - p_max_norm - p_shell
    return {"rhs": rhs, "first_term": first, "log_argument": arg,
            "vacuous": bool(arg <= 1.0 or rhs >= 1.0), "probability": prob}


def neighborliness_threshold(n: int, N: int, consts: BoundConstants, kind: str = "psi_r") -> dict:
    """Largest ``m`` covered by the neighborliness statements (floor of the formula).

    ``kind="psi_r"``: ``c n / (psi^4 log^(2/r)(C psi^6 N / n))``.
    ``kind="log_concave"``: ``c n / log^2(C N / n)``.
    """
    if not N >= n >= 1:
        raise ValueError("need N >= n >= 1")
    psi, C, c = consts.psi, consts.C_big, consts.c_small
    if kind == "psi_r":
        arg = C * psi ** 6 * N / n
        power, pre = 2.0 / consts.r, psi ** 4
    elif kind == "log_concave":
        arg = C * N / n
        power, pre = 2.0, 1.0
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if arg <= 1.0:
        return {"m_bar": None, "value": math.inf, "log_argument": arg, "flagged": True}
    value = c * n / (pre * math.log(arg) ** power)
    # guard against 17.999999... from rounding in the log
    m_bar = math.floor(value + 1e-12)
    return {"m_bar": m_bar, "value": value, "log_argument": arg, "flagged": False}


def bernstein_tail(t: float, psi1_norms, psi: float) -> float:
    """``2 exp(-t^2 / (4 sum ||Y_i||^2 + 2 t psi))``; may exceed one."""
    norms = np.asarray(psi1_norms, dtype=float).ravel()
    if not t > 0:
        raise ValueError("t must be positive")
    if norms.size and psi < norms.max():
        raise ValueError("psi must dominate every psi_1 norm")
    return 2.0 * math.exp(-t * t / (4.0 * float(np.sum(norms ** 2)) + 2.0 * t * psi))


def conjugate_norm(a, r: float) -> float:
    """``||a||_{r*}`` with ``1/r + 1/r* = 1`` (``r = 1`` gives the max norm)."""
    a = np.abs(np.asarray(a, dtype=float).ravel())
    if r == 1.0:
        return float(a.max())
    rs = r / (r - 1.0)
    return float(np.sum(a ** rs) ** (1.0 / rs))


def weibull_tail_bound(t: float, a, r: float, c: float) -> float:
    """``2 exp(-c min(t^2/||a||_2^2, t^r/||a||_{r*}^r))``."""
    if not 1.0 <= r <= 2.0:
        raise ValueError("r must lie in [1, 2]")
    if t < 0:
        raise ValueError("t must be non-negative")
    a = np.asarray(a, dtype=float).ravel()
    l2 = float(np.sqrt(np.sum(a * a)))
    return 2.0 * math.exp(-c * min(t * t / l2 ** 2, t ** r / conjugate_norm(a, r) ** r))


def mixed_tail_bound(t: float, n: int, b: float, s: float, c: float) -> float:
    """``2 exp(-c min(t^2/(n b^2), (t/b)^s))`` for ``s`` in [1/2, 1]."""
    if not 0.5 <= s <= 1.0:
        raise ValueError("s must lie in [1/2, 1]")
    if t < 0:
        raise ValueError("t must be non-negative")
    return 2.0 * math.exp(-c * min(t * t / (n * b * b), (t / b) ** s))


def thin_shell_prob(n: int, N: int, theta: float, consts: BoundConstants, mode: str = "proven",
                    c_theta: float | None = None) -> dict:
    """``C exp(-c theta^c0 n^c1)`` bound on ``P(max_i | |X_i|^2/n - 1 | >= theta)``.

    ``mode="conjectural"`` swaps the exponent for ``c_theta * sqrt(n)``.
    ``precondition_ok`` reports whether ``N <= exp(exponent)``.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    if mode == "proven":
        expo = consts.c_small * theta ** consts.c0 * n ** consts.c1
    elif mode == "conjectural":
        if c_theta is None:
            raise ValueError("conjectural mode needs c_theta")
        expo = c_theta * math.sqrt(n)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return {"prob": consts.C_big * math.exp(-expo), "exponent": expo,
            "precondition_ok": math.log(N) <= expo, "mode": mode}


def max_norm_prob(n: int, N: int, K: float, C0: float = 1.0) -> dict:
    """Failure probability ``exp(-K sqrt n)`` for ``max_i |X_i| <= C0 K sqrt n``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    return {"prob": math.exp(-K * math.sqrt(n)), "threshold": C0 * K * math.sqrt(n),
            "precondition_ok": math.log(N) <= math.sqrt(n)}


def am_lower_bound(n: int, N: int, m: int, t: float, c: float) -> dict:
    """Threshold ``c (sqrt n + sqrt m log(2N/m) + t)`` and floor ``min(c, e^-t)``."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if not 1 <= m <= N:
        raise ValueError("need 1 <= m <= N")
    thr = c * (math.sqrt(n) + math.sqrt(m) * math.log(2.0 * N / m) + t)
    return {"threshold": thr, "probability_floor": min(c, math.exp(-t))}


def _normalized_weibull(stream, r, size):
    return randsrc.sample_symmetric_weibull(stream, r, size) / math.sqrt(randsrc.weibull_variance(r))


def moment_growth_check(r: float, a, stream: RngStream, samples: int = 100_000,
                        constant: float | None = None) -> dict:
    """Empirical ``||sum a_i Z_i||_p`` against ``sqrt(p)||a||_2 + p^(1/r)||a||_{r*}``.

    ``Z_i`` are unit-variance symmetric Weibull(r).  ``passed`` compares the
    largest ratio over ``p in {2, 4, 6, 8}`` with ``constant`` (default from
    the fitted fixtures).
    """
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    a = np.asarray(a, dtype=float).ravel()
    if constant is None:
        constant = fitted_constants()["moment_ratio_bound"]
    S = np.zeros(samples)
    for i, ai in enumerate(a):
        if ai != 0.0:
            S += ai * _normalized_weibull(stream, r, samples)
    l2 = float(np.sqrt(np.sum(a * a)))
    rs = conjugate_norm(a, r)
    rows = []
    for p in (2, 4, 6, 8):
        est = float(np.mean(np.abs(S) ** p) ** (1.0 / p))
        ref = math.sqrt(p) * l2 + p ** (1.0 / r) * rs
        rows.append({"p": p, "moment": est, "reference": ref, "ratio": est / ref})
    worst = max(row["ratio"] for row in rows)
    return {"r": r, "rows": rows, "max_ratio": worst, "constant": constant, "passed": worst <= constant}


def empirical_weibull_tail(r: float, a, t_grid, stream: RngStream, samples: int = 100_000) -> np.ndarray:
    """Empirical ``P(|sum a_i Y_i| >= t)`` for unnormalized symmetric Weibull ``Y_i``."""
    a = np.asarray(a, dtype=float).ravel()
    S = np.zeros(samples)
    for ai in a:
        if ai != 0.0:
            S += ai * randsrc.sample_symmetric_weibull(stream, r, samples)
    absS = np.abs(S)
    return np.array([float(np.mean(absS >= t)) for t in t_grid])


def empirical_bernstein_tail(n: int, t_grid, stream: RngStream, samples: int = 100_000) -> np.ndarray:
    """Empirical tail of a sum of ``n`` unit-variance symmetric exponentials."""
    S = np.zeros(samples)
    for _ in range(n):
        S += randsrc.sample_symmetric_exponential(stream, samples)
    absS = np.abs(S)
    return np.array([float(np.mean(absS >= t)) for t in t_grid])


def fit_weibull_constant(r: float, a, t_grid, stream: RngStream, samples: int = 100_000) -> float:
    """Largest ``c`` keeping the Weibull tail bound above the empirical tail on ``t_grid``."""
    emp = empirical_weibull_tail(r, a, t_grid, stream, samples)
    a = np.asarray(a, dtype=float).ravel()
    l2 = float(np.sqrt(np.sum(a * a)))
    rs = conjugate_norm(a, r)
    best = math.inf
    for t, e in zip(t_grid, emp):
        if e <= 0.0:
            continue
        expo = min(t * t / l2 ** 2, t ** r / rs ** r)
        if e >= 2.0:
            return 0.0
        best = min(best, -math.log(e / 2.0) / expo)
    return best
