"""ReLU-based nonlinear matrix decomposition.

Factorizes a nonnegative sparse target M as ``M ~ max(0, U V)`` by
alternating a closed-form slack update with simultaneous Bregman proximal
factor updates, for six regularizer configurations, plus graph-regularized
clustering and sparse-basis compression pipelines built on top.
"""

from . import io
from ._backend import BACKEND_NAME, HAVE_COMPILED
from .kernels import KernelSpec, bregman_distance, lsmad_gap, psi_grad, psi_value
from .model import (FactorPair, ObservedMatrix, SlackMatrix, build_observed,
                    grad_f, objective, relative_error, update_slack)
from .proxops import (CubicCoefficients, coupled_scale_pair, cubic_positive_root,
                      hard_threshold, hard_threshold_columns, soft_threshold)
from .regularizers import RegularizerCase, kernel_for, reg_value, \
    subproblem_objective, update_uv
from .solvers import (SolveOptions, TraceRecord, assumption32_check, compute_pq,
                      extrapolate, init_factors, ippalm, nmd_aapb, rate_monitor,
                      run_solver)
from .tasks import (ClusterResult, CompressionResult, cluster_pipeline,
                    clustering_accuracy, compress_pipeline, hungarian, kmeans,
                    knn_graph_laplacian, nnls, tol_nmf)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "HAVE_COMPILED", "__version__", "io",
    "ObservedMatrix", "FactorPair", "SlackMatrix",
    "build_observed", "update_slack", "grad_f", "objective", "relative_error",
    "KernelSpec", "psi_value", "psi_grad", "bregman_distance", "lsmad_gap",
    "CubicCoefficients", "soft_threshold", "hard_threshold",
    "hard_threshold_columns", "cubic_positive_root", "coupled_scale_pair",
    "RegularizerCase", "kernel_for", "update_uv", "reg_value",
    "subproblem_objective",
    "SolveOptions", "TraceRecord", "nmd_aapb", "ippalm", "compute_pq",
    "extrapolate", "assumption32_check", "rate_monitor", "init_factors",
    "run_solver",
    "ClusterResult", "CompressionResult", "knn_graph_laplacian", "kmeans",
    "hungarian", "clustering_accuracy", "nnls", "tol_nmf",
    "cluster_pipeline", "compress_pipeline",
]
