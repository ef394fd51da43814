"""Faces of conv(+-X_i) and the equivalence with sparse recovery.

Every signed selection of size <= m spans a face exactly when every
m-sparse vector with that sign pattern is recovered by basis pursuit.
The cross check computes both sides independently.
"""

from cspolytope import EnsembleSpec, generate_matrix
from cspolytope.polytope import donoho_cross_check, neighborliness_order, vertex_census

A = generate_matrix(EnsembleSpec.gaussian(), 10, 14, seed=5)
census = vertex_census(A)
print(f"vertices: {census['vertices']} of {census['expected']}")
rep = neighborliness_order(A, 4)
print(f"centrally neighborly up to order {rep.order}; {len(rep.failures)} failing selections at the next size,"
      f" first {rep.failures[0].label() if rep.failures else None}")
pos = neighborliness_order(A, 4, mode="positive")
print(f"positive hull neighborly up to order {pos.order}")
for m in range(1, rep.order + 2):
    res = donoho_cross_check(A, m)
    print(f"m={m}: polytope {res['polytope']}, recovery {res['recovery']}, agree {res['agree']}")
