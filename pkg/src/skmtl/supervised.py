"""Supervised step: kernel ridge solve for fixed task structure.

With the structure ``A`` held fixed and the least-squares loss, the
optimal dual coefficients solve the Sylvester-type stationarity system

    K @ C @ A + n * lam * C = Y.

Diagonalizing ``K = U_k diag(w_k) U_k^T`` and ``A = U_a diag(w_a) U_a^T``
decouples the system entrywise in the joint eigenbasis:

    C = U_k [ (U_k^T Y U_a)_{it} / (w_k[i] * w_a[t] + n * lam) ] U_a^T.

No jitter or eigenvalue truncation is applied: the ``n * lam`` shift
already makes every denominator positive for PSD ``K`` and ``A``.

Note the regularizer scale: the objective weights the data term by
``1/n``, so ``lam`` here corresponds to an unnormalized-loss weight of
``n * lam``.  When reproducing results stated for an unnormalized
least-squares loss, divide that weight by ``n``.
"""

import numpy as np

from .errors import InvalidInput, NotPSD, RefusedTooLarge
from .model import StructureMatrix
from .spd_linalg import SymEig, sym_eig

__all__ = ["solve_supervised", "solve_supervised_dense_oracle"]


def _check_kya(k, y, a: StructureMatrix, lam: float):
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InvalidInput("Y must be 2-D (n, T)")
    n, t = y.shape
    if k.shape != (n, n):
        raise InvalidInput(f"K must be {n}x{n} to match Y, got {k.shape}")
    if a.n_tasks != t:
        raise InvalidInput(f"A is {a.n_tasks}x{a.n_tasks} but Y has {t} tasks")
    if not (np.all(np.isfinite(k)) and np.all(np.isfinite(y))):
        raise InvalidInput("K or Y contains non-finite entries")
    if not np.isfinite(lam) or lam <= 0.0:
        raise InvalidInput("lam must be finite and > 0")
    return k, y, n, t


def solve_supervised(
    k, y, a: StructureMatrix, lam: float, k_eig: SymEig | None = None
) -> np.ndarray:
    """Dual coefficients ``C`` minimizing the ridge objective at fixed ``A``.

    Parameters
    ----------
    k : (n, n) ndarray
        PSD training Gram matrix.
    y : (n, T) ndarray
        Targets.
    a : StructureMatrix
        Strictly positive definite task structure.
    lam : float
        Regularization weight (> 0).
    k_eig : SymEig, optional
        Precomputed eigendecomposition of ``k``; callers solving many
        right-hand sides against the same Gram matrix pass it to avoid
        refactorizing.

    Returns
    -------
    (n, T) ndarray
        Satisfies ``||K C A + n lam C - Y||_F <= 1e-8 ||Y||_F``.
    """
    k, y, n, _ = _check_kya(k, y, a, lam)
    a.require_invertible()
    if k_eig is None:
        k_eig = sym_eig(k)
    w_k = k_eig.eigenvalues
    scale = max(1.0, float(abs(w_k[-1])))
    if w_k[0] < -1e-8 * scale:
        raise NotPSD(f"K has eigenvalue {w_k[0]:.3e}; not PSD within tolerance")
    a_eig = sym_eig(a.A)
    u_k, u_a = k_eig.eigenvectors, a_eig.eigenvectors
    denom = np.outer(w_k, a_eig.eigenvalues) + n * lam
    return u_k @ ((u_k.T @ y @ u_a) / denom) @ u_a.T


def solve_supervised_dense_oracle(k, y, a: StructureMatrix, lam: float) -> np.ndarray:
    """Reference solve via the dense (n*T) x (n*T) normal system.

    Builds ``kron(A, K) + n lam I`` explicitly and solves for the
    column-major vectorization of ``C``.  Intended for validating
    :func:`solve_supervised` on small problems; refuses ``n * T > 200``.
    """
    k, y, n, t = _check_kya(k, y, a, lam)
    if n * t > 200:
        raise RefusedTooLarge(f"dense oracle limited to n*T <= 200, got {n * t}")
    m = np.kron(a.A, k) + n * lam * np.eye(n * t)
    c = np.linalg.solve(m, y.flatten(order="F"))
    return c.reshape((n, t), order="F")
