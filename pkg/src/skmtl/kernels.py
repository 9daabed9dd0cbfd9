"""Scalar kernels and Gram-matrix evaluation."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

__all__ = ["KernelSpec", "kernel_matrix", "LINEAR", "GAUSSIAN"]

LINEAR = "linear"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Choice of scalar kernel.

    kind : "linear" or "gaussian"
    bandwidth : required (> 0, finite) for the Gaussian kernel
        ``k(x, z) = exp(-||x - z||^2 / (2 * bandwidth**2))``; must be
        None for the linear kernel ``k(x, z) = <x, z>``.
    """

    kind: str
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind == LINEAR:
            if self.bandwidth is not None:
                raise InvalidInput("linear kernel takes no bandwidth")
        elif self.kind == GAUSSIAN:
            b = self.bandwidth
            if b is None or not np.isfinite(b) or b <= 0.0:
                raise InvalidInput("gaussian kernel needs a finite bandwidth > 0")
        else:
            raise InvalidInput(f"unknown kernel kind {self.kind!r}")


def _check_inputs(x, z):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.ndim != 2 or z.ndim != 2:
        raise InvalidInput("inputs must be 2-D arrays (rows = points)")
    if x.shape[1] != z.shape[1]:
        raise InvalidInput(f"dimension mismatch: {x.shape[1]} vs {z.shape[1]} features")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise InvalidInput("inputs contain non-finite entries")
    return x, z


def kernel_matrix(x, z, spec: KernelSpec) -> np.ndarray:
    """Gram matrix ``G[i, j] = k(x_i, z_j)``.

    When ``x`` and ``z`` are the same points the result is symmetrized
    and, for the Gaussian kernel, the diagonal is exactly 1.  No jitter
    or other regularization is ever added here.
    """
    x, z = _check_inputs(x, z)
    same = x is z or (x.shape == z.shape and np.array_equal(x, z))

    if spec.kind == LINEAR:
        g = x @ z.T
    else:
        sq = (
            np.sum(x * x, axis=1)[:, None]
            - 2.0 * (x @ z.T)
            + np.sum(z * z, axis=1)[None, :]
        )
        np.maximum(sq, 0.0, out=sq)
        if same:
            np.fill_diagonal(sq, 0.0)
        g = np.exp(sq / (-2.0 * spec.bandwidth**2))

    if same:
        g = 0.5 * (g + g.T)
    return g
