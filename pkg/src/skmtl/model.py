"""Core data types and the composite training objective.

A model predicts ``F(x) = K(x, X_train) @ C @ A`` where ``C`` holds the
dual coefficients of the supervised step and ``A`` is the (SPD) task
structure matrix.  The combination ``B = C @ A`` gives the per-task
expansion coefficients; the squared function norm is
``tr(A^{-1} B^T K B)``.

The training objective minimized by the alternating solver is

    (1/n) ||Y - K C A||_F^2
      + lam * ( tr(A^{-1} B^T K B) + epsilon * tr(A^{-1})
                + mu * tr(A) + (1 - mu) * ||A||_1 )

with ``||A||_1`` the entrywise l1 norm, diagonal included.  It is
jointly convex in ``(B, A)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NotInvertible, NotPSD
from .kernels import KernelSpec, kernel_matrix

__all__ = [
    "Dataset",
    "StructureMatrix",
    "Hyperparams",
    "MultiTaskModel",
    "task_coefficients",
    "predict",
    "rkhs_norm_sq",
    "objective",
    "objective_from_b",
]


def _as_2d(arr, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class Dataset:
    """Supervised data: inputs ``X`` (n, d) and targets ``Y`` (n, T)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        x = _as_2d(self.X, "X")
        y = _as_2d(self.Y, "Y")
        if x.shape[0] != y.shape[0]:
            raise InvalidInput(f"X has {x.shape[0]} rows but Y has {y.shape[0]}")
        if x.shape[0] < 1 or x.shape[1] < 1 or y.shape[1] < 1:
            raise InvalidInput("X and Y must be nonempty")
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "Y", y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_tasks(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class StructureMatrix:
    """Symmetric PSD task-structure matrix with an eigenvalue guard.

    ``eig_floor`` is a validation bound, not a modification: strictly
    inverse-consuming operations require ``min_eigenvalue > eig_floor``.
    Construction symmetrizes round-off asymmetry (rejecting anything
    beyond ``1e-10 * max(1, ||A||_F)``) and rejects matrices with an
    eigenvalue below ``-1e-10``.
    """

    A: np.ndarray
    eig_floor: float = 1e-10
    min_eigenvalue: float = field(init=False)

    def __post_init__(self):
        a = _as_2d(self.A, "A")
        if a.shape[0] != a.shape[1]:
            raise InvalidInput(f"A must be square, got {a.shape}")
        scale = max(1.0, float(np.linalg.norm(a)))
        if float(np.linalg.norm(a - a.T)) > 1e-10 * scale:
            raise InvalidInput("A is not symmetric within tolerance")
        a = 0.5 * (a + a.T)
        w_min = float(np.linalg.eigvalsh(a)[0])
        if w_min < -1e-10:
            raise NotPSD(f"A has eigenvalue {w_min:.3e} < -1e-10")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "min_eigenvalue", w_min)

    @property
    def n_tasks(self) -> int:
        return self.A.shape[0]

    def require_invertible(self) -> None:
        if self.min_eigenvalue <= self.eig_floor:
            raise NotInvertible(
                f"structure matrix min eigenvalue {self.min_eigenvalue:.3e} "
                f"<= floor {self.eig_floor:.3e}"
            )


@dataclass(frozen=True)
class Hyperparams:
    """Regularization weights and solver controls.

    lam : overall regularization weight (> 0); multiplies every penalty.
    mu : trace vs l1 trade-off in [0, 1] (1 = pure trace / dense,
        0 = pure l1 / sparse).
    epsilon : weight (> 0) of tr(A^{-1}), which keeps A invertible.
    outer_tol : relative tolerance on the change of the training
        objective between outer iterations.
    inner_tol : Frobenius tolerance on primal and dual increments of
        the structure subsolver.
    """

    lam: float
    mu: float
    epsilon: float
    outer_tol: float = 1e-5
    inner_tol: float = 1e-7
    max_outer: int = 100
    max_inner: int = 10000

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0.0:
            raise InvalidInput("lam must be finite and > 0")
        if not np.isfinite(self.mu) or not 0.0 <= self.mu <= 1.0:
            raise InvalidInput("mu must lie in [0, 1]")
        if not np.isfinite(self.epsilon) or self.epsilon <= 0.0:
            raise InvalidInput("epsilon must be finite and > 0")
        if self.outer_tol <= 0.0 or self.inner_tol <= 0.0:
            raise InvalidInput("tolerances must be > 0")
        if self.max_outer < 1 or self.max_inner < 1:
            raise InvalidInput("iteration limits must be >= 1")


@dataclass(frozen=True)
class MultiTaskModel:
    """A fitted predictor: training inputs, kernel, coefficients, structure."""

    train_X: np.ndarray
    kernel: KernelSpec
    C: np.ndarray
    A: StructureMatrix

    def __post_init__(self):
        x = _as_2d(self.train_X, "train_X")
        c = _as_2d(self.C, "C")
        if c.shape[0] != x.shape[0]:
            raise InvalidInput(f"C has {c.shape[0]} rows but train_X has {x.shape[0]}")
        if c.shape[1] != self.A.n_tasks:
            raise InvalidInput(f"C has {c.shape[1]} columns but A is {self.A.n_tasks}x{self.A.n_tasks}")
        object.__setattr__(self, "train_X", x)
        object.__setattr__(self, "C", c)

    @property
    def n_tasks(self) -> int:
        return self.A.n_tasks

    def predict(self, x_new) -> np.ndarray:
        return predict(self, x_new)


def task_coefficients(c: np.ndarray, a: StructureMatrix) -> np.ndarray:
    """Per-task expansion coefficients ``B = C @ A``."""
    c = _as_2d(c, "C")
    if c.shape[1] != a.n_tasks:
        raise InvalidInput(f"C has {c.shape[1]} columns but A is {a.n_tasks}x{a.n_tasks}")
    return c @ a.A


def predict(model: MultiTaskModel, x_new) -> np.ndarray:
    """Evaluate the model on new inputs: ``K(x_new, X_train) @ C @ A``."""
    x_new = _as_2d(x_new, "x_new")
    if x_new.shape[1] != model.train_X.shape[1]:
        raise InvalidInput(
            f"x_new has {x_new.shape[1]} features, model expects {model.train_X.shape[1]}"
        )
    k = kernel_matrix(x_new, model.train_X, model.kernel)
    return k @ (model.C @ model.A.A)


def _inv_from_eig(a: StructureMatrix):
    """Eigendecomposition-based inverse pieces of A; raises if near-singular."""
    a.require_invertible()
    w, u = np.linalg.eigh(a.A)
    if w[0] <= a.eig_floor:
        raise NotInvertible("structure matrix is singular to working precision")
    a_inv = (u / w) @ u.T
    return w, 0.5 * (a_inv + a_inv.T)


def rkhs_norm_sq(k: np.ndarray, b: np.ndarray, a: StructureMatrix) -> float:
    """Squared function norm ``tr(A^{-1} B^T K B)``.

    ``k`` is the training Gram matrix and ``b = C @ A``.  Nonnegative up
    to round-off for PSD ``k``.
    """
    k = _as_2d(k, "K")
    b = _as_2d(b, "B")
    if k.shape[0] != k.shape[1] or k.shape[1] != b.shape[0]:
        raise InvalidInput("K must be square with as many columns as B has rows")
    if b.shape[1] != a.n_tasks:
        raise InvalidInput("B column count must match the number of tasks")
    _, a_inv = _inv_from_eig(a)
    s = b.T @ (k @ b)
    s = 0.5 * (s + s.T)
    # tr(A^{-1} S) for symmetric factors
    return float(np.sum(a_inv * s))


def objective_from_b(
    k: np.ndarray, b: np.ndarray, a: StructureMatrix, y: np.ndarray, hp: Hyperparams
) -> float:
    """Training objective as a function of ``(B, A)`` (jointly convex).

    Same value as :func:`objective` with ``C = B @ A^{-1}``.
    """
    k = _as_2d(k, "K")
    b = _as_2d(b, "B")
    y = _as_2d(y, "Y")
    n = y.shape[0]
    if k.shape != (n, n) or b.shape != y.shape or b.shape[1] != a.n_tasks:
        raise InvalidInput("inconsistent shapes among K, B, Y, A")
    w, a_inv = _inv_from_eig(a)
    resid = y - k @ b
    s = b.T @ (k @ b)
    s = 0.5 * (s + s.T)
    reg = (
        float(np.sum(a_inv * s))
        + hp.epsilon * float(np.sum(1.0 / w))
        + hp.mu * float(np.trace(a.A))
        + (1.0 - hp.mu) * float(np.sum(np.abs(a.A)))
    )
    return float(np.sum(resid * resid)) / n + hp.lam * reg


def objective(
    k: np.ndarray, c: np.ndarray, a: StructureMatrix, y: np.ndarray, hp: Hyperparams
) -> float:
    """Training objective at dual coefficients ``C`` and structure ``A``."""
    c = _as_2d(c, "C")
    if c.shape[1] != a.n_tasks:
        raise InvalidInput("C column count must match the number of tasks")
    return objective_from_b(k, c @ a.A, a, y, hp)
