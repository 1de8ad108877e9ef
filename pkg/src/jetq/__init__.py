"""Complex-geometric unitary invariants of quotient modules along {z1 = 0}:
jet kernels, curvature splits, second fundamental forms, the order-k
equivalence test, and the bi-disc quotient-module example."""

__version__ = "0.1.0"

from .calculus import (DerivativeIndex, EvalDomainError, EvalPoint,
                       differentiate, evaluate, fd_mixed_derivative,
                       mixed_log_derivative)
from .equivalence import (DkResult, EquivalenceReport, dk_apply,
                          intertwine_check, order_k_equivalent,
                          rank2_invariants, rank2_metric_relations,
                          toeplitz_congruence_check)
from .expr import (KernelExpr, KernelSyntaxError, parse_kernel,
                   parse_kernel_file, serialize, substitute_affine)
from .geometry import (ConnectionMatrix, CurvatureSplit, MatrixKernelValue,
                       connection_matrix, curvature_matrix, curvature_split,
                       frame_change_check, jet_kernel, jet_metric,
                       second_fundamental_form, secfund_from_split,
                       toeplitz_jet_matrix)

__all__ = [
    "__version__",
    "KernelExpr", "KernelSyntaxError", "parse_kernel", "serialize",
    "parse_kernel_file", "substitute_affine",
    "EvalPoint", "DerivativeIndex", "EvalDomainError",
    "differentiate", "evaluate", "mixed_log_derivative", "fd_mixed_derivative",
    "MatrixKernelValue", "CurvatureSplit", "ConnectionMatrix",
    "jet_kernel", "jet_metric", "toeplitz_jet_matrix", "curvature_matrix",
    "curvature_split", "second_fundamental_form", "secfund_from_split",
    "connection_matrix", "frame_change_check",
    "DkResult", "EquivalenceReport", "dk_apply", "order_k_equivalent",
    "rank2_invariants", "toeplitz_congruence_check", "intertwine_check",
    "rank2_metric_relations",
]
