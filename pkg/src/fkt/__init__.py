"""Fast kernel transform: O(N log N) isotropic kernel matrix-vector products."""

from .core import (
    DimensionMismatch,
    FktPlan,
    ZeroReference,
    barnes_hut_multiply,
    barnes_hut_plan,
    build_operators,
    dense_matrix,
    dense_multiply,
    multiply,
    plan,
    relative_error,
)
from .expansion import (
    MAX_ORDER,
    CoefficientTable,
    NotRecurrenceKernel,
    OrderTooLarge,
    build_coefficient_table,
    build_m2t,
    build_s2m,
    expansion_size,
    radial_compression,
    radial_function,
    truncated_kernel,
    truncation_error_bound,
)
from .gp import CgDiagnostics, GpPrediction, NoisyOperator, NotConverged, cg_solve, gp_posterior_dense, gp_posterior_mean
from .harmonics import ZeroVector, evaluate_harmonics, gegenbauer, harmonic_basis, harmonic_count
from .kernels import KERNELS, IsotropicKernel, SingularAtZero, eval_kernel, make_kernel
from .tree import build_tree, compute_interaction_sets

__all__ = [
    "DimensionMismatch",
    "FktPlan",
    "ZeroReference",
    "barnes_hut_multiply",
    "barnes_hut_plan",
    "build_operators",
    "dense_matrix",
    "dense_multiply",
    "multiply",
    "plan",
    "relative_error",
    "MAX_ORDER",
    "CoefficientTable",
    "NotRecurrenceKernel",
    "OrderTooLarge",
    "build_coefficient_table",
    "build_m2t",
    "build_s2m",
    "expansion_size",
    "radial_compression",
    "radial_function",
    "truncated_kernel",
    "truncation_error_bound",
    "CgDiagnostics",
    "GpPrediction",
    "NoisyOperator",
    "NotConverged",
    "cg_solve",
    "gp_posterior_dense",
    "gp_posterior_mean",
    "ZeroVector",
    "evaluate_harmonics",
    "gegenbauer",
    "harmonic_basis",
    "harmonic_count",
    "KERNELS",
    "IsotropicKernel",
    "SingularAtZero",
    "eval_kernel",
    "make_kernel",
    "build_tree",
    "compute_interaction_sets",
]
