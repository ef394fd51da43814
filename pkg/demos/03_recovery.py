"""Basis pursuit, dual certificates and the null-space property.

On the 2 x 3 matrix [[1,0,1],[0,1,1]] the vector e3 is recovered while
e1 + e2 is not: basis pursuit prefers e3, whose l1 norm is 1.  The dual
certificate and the null-space value tell the same story support by
support.
"""

import numpy as np

from cspolytope import EnsembleSpec, generate_matrix
from cspolytope.linalg import nullspace_basis
from cspolytope.recovery import (
    SignedSupport,
    all_sparse_recovery_check,
    decode_l1,
    dual_certificate_value,
    exact_recovery_trial,
    nsp_signed_value,
)

A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
K = nullspace_basis(A)
for text in ("3:+", "1:+,2:+"):
    S = SignedSupport.parse(text)
    trial = exact_recovery_trial(A, S.vector(3))
    cert = dual_certificate_value(A, S)
    nsp = nsp_signed_value(K, S)
    print(f"{text:8s} recovered={trial.success}  gamma={cert.gamma:.3f} ({cert.verdict.value})  "
          f"null-space value={nsp.value:.3f}")
print("all 1-sparse recovered:", all_sparse_recovery_check(A, 1).passed)
print("all 2-sparse recovered:", all_sparse_recovery_check(A, 2).passed)

# l1 decoding: one grossly corrupted measurement is ignored
X = generate_matrix(EnsembleSpec.gaussian(), 20, 80, seed=1)
x0 = np.linspace(-1, 1, 20)
y = X.entries.T @ x0
y[17] += 50.0
print("decoding error with one corrupted measurement:", np.abs(decode_l1(X, y) - x0).max())

# random sparse recovery on a larger Gaussian instance
G = generate_matrix(EnsembleSpec.gaussian(), 30, 60, seed=2)
z = np.zeros(60)
z[[4, 19, 33, 51]] = [1.5, -0.2, 3.0, -1.0]
print("4-sparse recovery on 30 x 60:", exact_recovery_trial(G, z).success)
