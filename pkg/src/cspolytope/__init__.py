"""Sparse recovery, restricted isometry and neighborly polytopes for random matrices.

Indices are 0-based throughout the library; labels and the command line
use 1-based indices.
"""

__version__ = "0.1.0"

from .randsrc import ALGORITHM_ID, RngStream
from .ensembles import EnsembleSpec, SensingMatrix, check_h1, check_h2, generate_matrix
from .linalg import jacobi_symmetric_eigen, nullspace_basis
from .simplex import LinearProgram, LpSolution, LpStatus, solve_lp, solve_lp_free
from .rip import (
    BudgetExceeded,
    candes_criterion,
    chaos_statistics,
    isometry_constant_exact,
    isometry_constant_sampled,
)
from .recovery import (
    SignedSupport,
    Verdict,
    all_sparse_recovery_check,
    basis_pursuit,
    decode_l1,
    dual_certificate_value,
    exact_recovery_trial,
    nullspace_property_check,
)
from .polytope import donoho_cross_check, is_face, neighborliness_order, vertex_census
from .bounds import BoundConstants
from .harness import ExperimentConfig, run_phase_transition, run_selftest

__all__ = [
    "__version__",
    "ALGORITHM_ID",
    "RngStream",
    "EnsembleSpec",
    "SensingMatrix",
    "check_h1",
    "check_h2",
    "generate_matrix",
    "jacobi_symmetric_eigen",
    "nullspace_basis",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "solve_lp",
    "solve_lp_free",
    "BudgetExceeded",
    "candes_criterion",
    "chaos_statistics",
    "isometry_constant_exact",
    "isometry_constant_sampled",
    "SignedSupport",
    "Verdict",
    "all_sparse_recovery_check",
    "basis_pursuit",
    "decode_l1",
    "dual_certificate_value",
    "exact_recovery_trial",
    "nullspace_property_check",
    "donoho_cross_check",
    "is_face",
    "neighborliness_order",
    "vertex_census",
    "BoundConstants",
    "ExperimentConfig",
    "run_phase_transition",
    "run_selftest",
]
