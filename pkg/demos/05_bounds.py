"""Plug-in values of the quantitative bounds.

The universal constants C and c are not known; every calculator takes
them explicitly and defaults to 1.  The values show the shape of each
bound, not a guarantee.
"""

import math

import numpy as np

from cspolytope import RngStream
from cspolytope.bounds import (
    BoundConstants,
    empirical_weibull_tail,
    fitted_constants,
    neighborliness_threshold,
    rip_bound_rhs,
    uup_bound,
    weibull_tail_bound,
)

consts = BoundConstants()
for m in (10, 4, 3):
    u = uup_bound(10_000, 10_000, m, consts)
    print(f"uup m={m}: {u['lhs']:.1f} vs {u['rhs']:.0f} -> admissible {u['admissible']}")
for r in (1.0, 2.0):
    t = neighborliness_threshold(100, 1000, consts.replace(r=r))
    print(f"neighborliness threshold r={r:g}: {t['m_bar']}")
print("rip rhs, n=10^6, N=10^7, m=5:", round(rip_bound_rhs(10**6, 10**7, 5, consts)["rhs"], 4))

# empirical Weibull tails against the frozen constant
c = fitted_constants()["weibull_tail_c"]
a = np.ones(16)
grid = [g * 4.0 for g in (1, 2, 4)]
emp = empirical_weibull_tail(1.0, a, grid, RngStream(12, 0))
for t, e in zip(grid, emp):
    print(f"t={t:4.0f}: empirical {e:.2e} <= bound {weibull_tail_bound(t, a, 1.0, c):.2e}")
