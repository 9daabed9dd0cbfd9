"""Symmetric/SPD matrix primitives used throughout the package.

Everything here is a thin, contract-checked layer over LAPACK (through
``numpy.linalg``) plus one genuinely custom routine: the positive root of
the depressed-cubic family ``x**3 - s*x**2 - eta = 0`` that appears in the
proximal map of ``tr(A**-1)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotInvertible, NotPSD

__all__ = [
    "SymEig",
    "sym_eig",
    "spd_sqrt",
    "spd_inv_sqrt",
    "positive_cubic_root",
]

# Relative symmetry tolerance accepted by sym_eig before symmetrizing.
SYM_TOL = 1e-8


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix.

    Attributes
    ----------
    eigenvalues : (t,) ndarray
        Sorted ascending.
    eigenvectors : (t, t) ndarray
        Orthonormal columns; ``eigenvectors[:, i]`` pairs with
        ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def _as_square(z, name: str) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise InvalidInput(f"{name} must be a square 2-D array, got shape {z.shape}")
    if z.size == 0:
        raise InvalidInput(f"{name} must be nonempty")
    if not np.all(np.isfinite(z)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return z


def sym_eig(z) -> SymEig:
    """Eigendecomposition of a (nearly) symmetric matrix.

    The input is symmetrized as ``(z + z.T) / 2`` before factorization.
    Asymmetry beyond ``1e-8 * max(1, ||z||_F)`` is rejected rather than
    silently absorbed.
    """
    z = _as_square(z, "z")
    scale = max(1.0, float(np.linalg.norm(z)))
    if float(np.linalg.norm(z - z.T)) > SYM_TOL * scale:
        raise InvalidInput("matrix is not symmetric within tolerance")
    w, u = np.linalg.eigh(0.5 * (z + z.T))
    return SymEig(eigenvalues=w, eigenvectors=u)


def spd_sqrt(p) -> np.ndarray:
    """Symmetric square root of a PSD matrix.

    Eigenvalues in ``[-1e-10, 0)`` are clamped to zero; anything more
    negative raises :class:`NotPSD`.  The result ``m`` is symmetric and
    satisfies ``||m @ m - p||_F <= 1e-8 * max(1, ||p||_F)``.
    """
    e = sym_eig(p)
    w = e.eigenvalues
    if w[0] < -1e-10:
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e} < -1e-10")
    u = e.eigenvectors
    m = (u * np.sqrt(np.maximum(w, 0.0))) @ u.T
    return 0.5 * (m + m.T)


def spd_inv_sqrt(p) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix.

    Requires all eigenvalues >= 1e-12; otherwise raises
    :class:`NotInvertible`.  Satisfies ``||m @ p @ m - I||_F <= 1e-8``.
    """
    e = sym_eig(p)
    w = e.eigenvalues
    if w[0] < 1e-12:
        raise NotInvertible(f"matrix has eigenvalue {w[0]:.3e} < 1e-12; not safely invertible")
    u = e.eigenvectors
    m = (u / np.sqrt(w)) @ u.T
    return 0.5 * (m + m.T)


def _cubic_start(s: np.ndarray, eta: float) -> np.ndarray:
    """Closed-form estimate of the positive root of x^3 - s x^2 - eta.

    Depressed form (x = t + s/3): t^3 + p t + q with p = -s^2/3,
    q = -2 s^3/27 - eta.  The discriminant simplifies exactly to
    D = eta*s^3/27 + eta^2/4, which avoids the catastrophic cancellation
    of the generic (q/2)^2 + (p/3)^3 formula.  The positive root is the
    largest real root (the cubic has exactly one sign change).
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        disc = (eta / 27.0) * s**3 + 0.25 * eta * eta
        t = np.empty_like(s)

        one = disc >= 0.0  # single real root; here q <= 0 so no cancellation
        if np.any(one):
            so = s[one]
            t1 = (so**3 / 27.0 + 0.5 * eta) + np.sqrt(disc[one])
            u = np.cbrt(t1)
            t[one] = np.where(u > 0.0, u + so**2 / (9.0 * u), 0.0)

        tri = ~one  # three real roots (only reachable for s < 0); take the largest
        if np.any(tri):
            st = s[tri]
            r = np.abs(st) / 3.0
            cosarg = np.clip((st**3 / 27.0 + 0.5 * eta) / r**3, -1.0, 1.0)
            t[tri] = 2.0 * r * np.cos(np.arccos(cosarg) / 3.0)

        return t + s / 3.0


def _positive_cubic_roots(s: np.ndarray, eta: float) -> np.ndarray:
    """Vectorized positive root of x^3 - s x^2 - eta = 0 (eta > 0).

    Closed-form start, then safeguarded Newton inside the bracket
    [0, max(s, 0) + eta + 1], bisecting whenever a Newton step leaves the
    bracket.  Converges to |residual| <= 1e-13 * max(1, x^3).
    """
    s = np.asarray(s, dtype=float)
    lo = np.zeros_like(s)
    hi = np.maximum(s, 0.0) + eta + 1.0

    x = _cubic_start(s, eta)
    bad = ~np.isfinite(x) | (x <= lo) | (x >= hi)
    if np.any(bad):
        # fall back to a seed known to sit above the root
        x = np.where(bad, np.maximum(s, np.cbrt(eta)) + 1.0, x)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(120):
            p = (x - s) * x * x - eta
            done = np.abs(p) <= 1e-13 * np.maximum(1.0, x**3)
            if done.all():
                break
            neg = p < 0.0
            lo = np.where(~done & neg, np.maximum(lo, x), lo)
            hi = np.where(~done & ~neg, np.minimum(hi, x), hi)
            dp = x * (3.0 * x - 2.0 * s)
            step = np.where(done, 0.0, p / dp)
            xn = x - step
            reject = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            xn = np.where(reject, 0.5 * (lo + hi), xn)
            stalled = (hi - lo) <= 8.0 * np.finfo(float).eps * np.maximum(hi, 1.0)
            x = np.where(done | stalled, x, xn)
            if np.all(done | stalled):
                break
    return x


def positive_cubic_root(s: float, eta: float) -> float:
    """Unique positive root of ``x**3 - s*x**2 - eta = 0``.

    Parameters
    ----------
    s : float
        Any finite real number.
    eta : float
        Strictly positive.

    Returns
    -------
    float
        The root ``x > 0``, with residual ``|x**3 - s*x**2 - eta|``
        at most ``1e-12 * max(1, x**3)``.
    """
    if not np.isfinite(s):
        raise InvalidInput("s must be finite")
    if not np.isfinite(eta) or eta <= 0.0:
        raise InvalidInput("eta must be a finite positive number")
    return float(_positive_cubic_roots(np.asarray([s], dtype=float), float(eta))[0])
