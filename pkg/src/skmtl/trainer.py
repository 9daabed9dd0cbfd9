"""Alternating minimization, baselines, and cross-validated selection.

``fit`` alternates a closed-form supervised step (dual coefficients at
fixed structure) with the primal-dual structure solver (structure at
fixed per-task expansion B = C A), monitoring the joint objective
S(B, A); the sequence is jointly convex so the trace must descend.
Baselines reuse the same supervised step with a frozen structure:
single-task learning is the identity structure, and any strictly
positive definite matrix can be supplied directly.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, InvalidInput
from .evaluation import accuracy, nmse
from .kernels import KernelSpec, kernel_matrix
from .model import (
    Dataset,
    Hyperparams,
    MultiTaskModel,
    StructureMatrix,
    objective_from_b,
)
from .spd_linalg import SymEig, sym_eig
from .structure import solve_structure, structure_subproblem
from .supervised import solve_supervised

__all__ = [
    "SKMTL",
    "FIXED_STRUCTURE",
    "SINGLE_TASK",
    "CONVERGED",
    "MAX_ITERATIONS",
    "FitMode",
    "FitReport",
    "CVCell",
    "fit",
    "cv_grid_search",
]

SKMTL = "skmtl"
FIXED_STRUCTURE = "fixed_structure"
SINGLE_TASK = "single_task"

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class FitMode:
    """Training variant: joint learning, or a frozen structure.

    Use the constructors: ``FitMode.skmtl()``, ``FitMode.single_task()``,
    ``FitMode.fixed(structure)``.
    """

    kind: str
    structure: StructureMatrix | None = None

    def __post_init__(self):
        if self.kind not in (SKMTL, FIXED_STRUCTURE, SINGLE_TASK):
            raise InvalidInput(f"unknown fit mode {self.kind!r}")
        if self.kind == FIXED_STRUCTURE:
            if self.structure is None:
                raise InvalidInput("fixed-structure mode needs a StructureMatrix")
            self.structure.require_invertible()
        elif self.structure is not None:
            raise InvalidInput(f"mode {self.kind!r} does not take a structure")

    @staticmethod
    def skmtl() -> "FitMode":
        return FitMode(SKMTL)

    @staticmethod
    def single_task() -> "FitMode":
        return FitMode(SINGLE_TASK)

    @staticmethod
    def fixed(structure: StructureMatrix) -> "FitMode":
        return FitMode(FIXED_STRUCTURE, structure)


@dataclass(frozen=True)
class FitReport:
    """Progress record of one training run.

    ``objective_trace[0]`` is the joint objective after the first
    supervised step at the initial structure; each later entry follows a
    supervised + structure half-step pair.  ``inner_iters`` and
    ``inner_converged`` describe the structure solves (empty for the
    frozen-structure modes).
    """

    objective_trace: np.ndarray
    inner_iters: np.ndarray
    inner_converged: tuple
    status: str
    wall_time: float
    outer_iterations: int = 0


def _final_c(b: np.ndarray, a: StructureMatrix) -> np.ndarray:
    # C = B A^{-1} with symmetric A
    return np.linalg.solve(a.A, b.T).T


def _fit_gram(
    k: np.ndarray,
    y: np.ndarray,
    hp: Hyperparams,
    mode: FitMode,
    k_eig: SymEig,
):
    """Training loop on a precomputed Gram matrix; returns (C, A, report)."""
    t0 = time.perf_counter()
    n_tasks = y.shape[1]

    if mode.kind in (SINGLE_TASK, FIXED_STRUCTURE):
        a = (
            StructureMatrix(np.eye(n_tasks))
            if mode.kind == SINGLE_TASK
            else mode.structure
        )
        if a.n_tasks != n_tasks:
            raise InvalidInput(f"structure is {a.n_tasks}x{a.n_tasks}, data has {n_tasks} tasks")
        c = solve_supervised(k, y, a, hp.lam, k_eig)
        s0 = objective_from_b(k, c @ a.A, a, y, hp)
        report = FitReport(
            objective_trace=np.array([s0]),
            inner_iters=np.zeros(0, dtype=int),
            inner_converged=(),
            status=CONVERGED,
            wall_time=time.perf_counter() - t0,
            outer_iterations=0,
        )
        return c, a, report

    a = StructureMatrix(np.eye(n_tasks))
    c = solve_supervised(k, y, a, hp.lam, k_eig)
    b = c @ a.A
    trace = [objective_from_b(k, b, a, y, hp)]
    if not np.isfinite(trace[0]):
        raise Diverged("non-finite objective after first supervised step")
    delta = hp.outer_tol * (1.0 + abs(trace[0]))

    inner_iters, inner_ok = [], []
    state = None
    status = MAX_ITERATIONS
    outer = 0
    for outer in range(1, hp.max_outer + 1):
        prob = structure_subproblem(k, b, hp.mu, hp.epsilon)
        a, state, diag = solve_structure(
            prob, init=state, inner_tol=hp.inner_tol, max_inner=hp.max_inner
        )
        inner_iters.append(diag.iterations)
        inner_ok.append(diag.converged)
        trace.append(objective_from_b(k, b, a, y, hp))
        if not np.isfinite(trace[-1]):
            raise Diverged(f"non-finite objective at outer iteration {outer}")
        if abs(trace[-1] - trace[-2]) < delta:
            status = CONVERGED
            break
        c = solve_supervised(k, y, a, hp.lam, k_eig)
        b = c @ a.A

    c = _final_c(b, a)
    report = FitReport(
        objective_trace=np.asarray(trace),
        inner_iters=np.asarray(inner_iters, dtype=int),
        inner_converged=tuple(inner_ok),
        status=status,
        wall_time=time.perf_counter() - t0,
        outer_iterations=outer,
    )
    return c, a, report


def fit(
    data: Dataset, kernel: KernelSpec, hp: Hyperparams, mode: FitMode | None = None
):
    """Train a multi-task model.

    Parameters
    ----------
    data : Dataset
        Training inputs and targets.
    kernel : KernelSpec
        Kernel for the Gram matrix.
    hp : Hyperparams
        Regularization and stopping controls.
    mode : FitMode, optional
        Defaults to joint structure learning.

    Returns
    -------
    model : MultiTaskModel
    report : FitReport

    Notes
    -----
    Joint mode initializes the structure at the identity, takes the
    closed-form supervised step, then alternates structure and
    supervised solves until the objective change drops below
    ``outer_tol * (1 + |first objective|)`` or ``max_outer`` is hit.
    The structure solver is warm-started across outer iterations.  A
    structure solve that exhausts ``max_inner`` is recorded in the
    report (``inner_converged``) and the outer loop continues.
    """
    if mode is None:
        mode = FitMode.skmtl()
    k = kernel_matrix(data.X, data.X, kernel)
    k_eig = sym_eig(k)
    c, a, report = _fit_gram(k, data.Y, hp, mode, k_eig)
    model = MultiTaskModel(train_X=data.X, kernel=kernel, C=c, A=a)
    return model, report


@dataclass(frozen=True)
class CVCell:
    """Cross-validation result for one hyperparameter setting."""

    hp: Hyperparams
    mean_score: float
    std_score: float
    fold_scores: tuple = field(repr=False, default=())


def _prefer(cand: CVCell, best: CVCell, classification: bool) -> bool:
    """True when ``cand`` beats ``best`` (ties: larger lam, then larger mu)."""
    a, b = cand.mean_score, best.mean_score
    if a != b:
        return a > b if classification else a < b
    if cand.hp.lam != best.hp.lam:
        return cand.hp.lam > best.hp.lam
    return cand.hp.mu > best.hp.mu


def _fold_indices(n: int, folds: int, seed: int):
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), folds)


def cv_grid_search(
    data: Dataset,
    kernel: KernelSpec,
    grid,
    folds: int,
    mode: FitMode | None = None,
    seed: int = 0,
    classification: bool = False,
):
    """Pick hyperparameters by k-fold cross validation.

    Scores are validation nMSE (minimized) or, with
    ``classification=True``, argmax accuracy against the one-vs-all
    targets (maximized).  Fold assignment is a seeded permutation split
    into ``folds`` nearly equal parts; ties between cells go to the
    larger ``lam``, then the larger ``mu``.

    Returns
    -------
    best : Hyperparams
    table : list of CVCell
        One entry per grid cell, in grid order.
    """
    grid = list(grid)
    if not grid:
        raise InvalidInput("grid must be nonempty")
    if folds < 2:
        raise InvalidInput("folds must be >= 2")
    if mode is None:
        mode = FitMode.skmtl()
    n = data.n_samples
    parts = _fold_indices(n, folds, seed)
    if min(p.size for p in parts) < 1 or n - max(p.size for p in parts) < 1:
        raise InvalidInput(f"cannot split {n} samples into {folds} usable folds")

    k_full = kernel_matrix(data.X, data.X, kernel)
    fold_data = []
    for val_idx in parts:
        train_idx = np.setdiff1d(np.arange(n), val_idx, assume_unique=False)
        k_tr = k_full[np.ix_(train_idx, train_idx)]
        fold_data.append(
            (
                k_tr,
                sym_eig(k_tr),
                data.Y[train_idx],
                k_full[np.ix_(val_idx, train_idx)],
                data.Y[val_idx],
            )
        )

    table = []
    for hp in grid:
        scores = []
        for k_tr, k_eig, y_tr, k_val, y_val in fold_data:
            c, a, _ = _fit_gram(k_tr, y_tr, hp, mode, k_eig)
            pred = k_val @ (c @ a.A)
            if classification:
                labels = np.argmax(y_val, axis=1)
                scores.append(accuracy(labels, pred))
            else:
                scores.append(nmse(y_val, pred))
        scores = np.asarray(scores)
        table.append(
            CVCell(
                hp=hp,
                mean_score=float(scores.mean()),
                std_score=float(scores.std()),
                fold_scores=tuple(float(s) for s in scores),
            )
        )

    best = table[0]
    for cell in table[1:]:
        if _prefer(cell, best, classification):
            best = cell
    return best.hp, table
