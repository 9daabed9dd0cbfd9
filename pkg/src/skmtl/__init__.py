"""Sparse kernel multi-task learning.

Joint estimation of per-task kernel predictors and a sparse, positive
definite task-structure matrix by alternating minimization: a kernel
ridge step in a joint eigenbasis, and a primal-dual splitting step with
closed-form proximal maps for the structure matrix.
"""

from .errors import (
    Diverged,
    InvalidInput,
    NotInvertible,
    NotPSD,
    ParseError,
    RefusedTooLarge,
    SkmtlError,
    ZeroVariance,
)
from .evaluation import (
    SupportRecovery,
    accuracy,
    export_structure_graph,
    heatmap_csv,
    nmse,
    support_recovery,
)
from .kernels import GAUSSIAN, LINEAR, KernelSpec, kernel_matrix
from .model import (
    Dataset,
    Hyperparams,
    MultiTaskModel,
    StructureMatrix,
    objective,
    objective_from_b,
    predict,
    rkhs_norm_sq,
    task_coefficients,
)
from .spd_linalg import positive_cubic_root, spd_inv_sqrt, spd_sqrt, sym_eig
from .structure import (
    SplitState,
    StructureDiagnostics,
    StructureProblem,
    prox_trace_inverse,
    soft_threshold,
    solve_structure,
    structure_from_graph,
    structure_from_matrix,
    structure_mean_variance,
    structure_subproblem,
    subproblem_objective,
)
from .supervised import solve_supervised, solve_supervised_dense_oracle
from .synth import SynthConfig, SynthInstance, generate, sparsity_sweep
from .trainer import CVCell, FitMode, FitReport, cv_grid_search, fit

__version__ = "0.1.0"

__all__ = [
    "SkmtlError", "InvalidInput", "NotPSD", "NotInvertible", "ZeroVariance",
    "RefusedTooLarge", "ParseError", "Diverged",
    "KernelSpec", "kernel_matrix", "LINEAR", "GAUSSIAN",
    "Dataset", "StructureMatrix", "Hyperparams", "MultiTaskModel",
    "task_coefficients", "predict", "rkhs_norm_sq", "objective", "objective_from_b",
    "sym_eig", "spd_sqrt", "spd_inv_sqrt", "positive_cubic_root",
    "solve_supervised", "solve_supervised_dense_oracle",
    "SplitState", "StructureProblem", "StructureDiagnostics",
    "soft_threshold", "prox_trace_inverse", "structure_subproblem",
    "subproblem_objective", "solve_structure",
    "structure_from_graph", "structure_mean_variance", "structure_from_matrix",
    "SynthConfig", "SynthInstance", "generate", "sparsity_sweep",
    "FitMode", "FitReport", "CVCell", "fit", "cv_grid_search",
    "nmse", "accuracy", "SupportRecovery", "support_recovery",
    "export_structure_graph", "heatmap_csv",
    "__version__",
]
