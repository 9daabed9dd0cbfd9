"""Structure step: sparse SPD matrix estimation by primal-dual splitting.

For fixed task coefficients ``B`` the structure matrix solves

    min_{A > 0}  tr(A^{-1} P) + mu * tr(A) + (1 - mu) * ||A||_1,
    P = B^T K B + epsilon * I,

with the l1 norm over all entries, diagonal included.  The solver is a
primal-dual (Condat-Vu type) iteration on the splitting

    G(A) = mu * tr(A)            (smooth, gradient mu*I, Lipschitz 0)
    H1(A) = (1 - mu) * ||A||_1   (prox = soft thresholding)
    H2(Z) = tr(Z^{-1}) + {Z > 0} (prox = closed form per eigenvalue)

composed with the linear map ``L(A) = M A M`` where ``M = P^{-1/2}``,
so that ``H2(L(A)) = tr(A^{-1} P)``.  Primal and dual steps are both
``1/sigma`` with ``sigma = ||M||^2``; the step-size product times
``||L||^2`` is then exactly 1, the boundary of the admissible range.

The dual update uses the Moreau identity at step ``1/sigma``:

    D <- P~ - (1/sigma) * prox_trace_inverse(sigma * P~, sigma).

A variant omitting the ``1/sigma`` factor is exposed as
``paper_dual_update=True``; its fixed point solves the stationarity
condition only when ``sigma == 1``, so it is wrong in general (kept for
comparison, and tested to fail the ``mu = 1`` oracle when sigma != 1).
"""

from dataclasses import dataclass

import numpy as np

from .errors import Diverged, InvalidInput, NotInvertible
from .model import StructureMatrix
from .spd_linalg import _positive_cubic_roots, sym_eig

__all__ = [
    "SplitState",
    "StructureProblem",
    "StructureDiagnostics",
    "soft_threshold",
    "prox_trace_inverse",
    "structure_subproblem",
    "subproblem_objective",
    "solve_structure",
    "structure_from_graph",
    "structure_mean_variance",
    "structure_from_matrix",
]


def _sym(z: np.ndarray) -> np.ndarray:
    return 0.5 * (z + z.T)


@dataclass(frozen=True)
class SplitState:
    """Primal/dual iterate pair of the splitting solver."""

    A: np.ndarray
    D: np.ndarray
    iterations: int = 0
    primal_change: float = np.inf
    dual_change: float = np.inf

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        d = np.asarray(self.D, dtype=float)
        for name, z in (("A", a), ("D", d)):
            if z.ndim != 2 or z.shape[0] != z.shape[1]:
                raise InvalidInput(f"{name} must be square")
            if not np.all(np.isfinite(z)):
                raise InvalidInput(f"{name} contains non-finite entries")
            if np.linalg.norm(z - z.T) > 1e-10 * max(1.0, np.linalg.norm(z)):
                raise InvalidInput(f"{name} is not symmetric within tolerance")
        if a.shape != d.shape:
            raise InvalidInput("A and D must have the same shape")
        object.__setattr__(self, "A", _sym(a))
        object.__setattr__(self, "D", _sym(d))


@dataclass(frozen=True)
class StructureProblem:
    """Data of the structure subproblem: P, its inverse square root, step scale."""

    P: np.ndarray
    M: np.ndarray
    sigma: float
    mu: float

    @property
    def n_tasks(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True)
class StructureDiagnostics:
    """Solver summary: status, objective bookkeeping, certified gap.

    ``gap`` bounds ``objective - optimum`` from above (weak duality with
    a feasibility-repaired dual point; exact round-off excepted).
    ``snapshots`` holds (iteration, objective) pairs of clamped iterates.
    """

    converged: bool
    iterations: int
    primal_change: float
    dual_change: float
    objective: float
    objective_init: float
    gap: float
    best_iteration: int
    snapshots: tuple


def soft_threshold(z, eta: float):
    """Entrywise shrinkage ``sign(z) * max(|z| - eta, 0)``."""
    if not np.isfinite(eta) or eta < 0.0:
        raise InvalidInput("eta must be finite and >= 0")
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidInput("input contains non-finite entries")
    return np.sign(z) * np.maximum(np.abs(z) - eta, 0.0)


def _prox_trace_inverse_eig(z: np.ndarray, eta: float) -> np.ndarray:
    # hot path: symmetric input assumed, no validation
    w, u = np.linalg.eigh(z)
    lam = _positive_cubic_roots(w, eta)
    return _sym((u * lam) @ u.T)


def prox_trace_inverse(z, eta: float) -> np.ndarray:
    """Proximal map of ``eta * tr(A^{-1})`` over SPD matrices.

    Returns the minimizer of ``eta * tr(A^{-1}) + 0.5 * ||A - Z||_F^2``:
    in ``Z``'s eigenbasis each eigenvalue is the positive root of
    ``lam**3 - lam**2 * sigma_t - eta = 0``.  The result is strictly PD
    for any symmetric ``Z`` and satisfies
    ``||A^3 - A^2 Z - eta I||_F <= 1e-8 * max(1, ||A||_F^3)``.
    """
    if not np.isfinite(eta) or eta <= 0.0:
        raise InvalidInput("eta must be finite and > 0")
    e = sym_eig(z)
    lam = _positive_cubic_roots(e.eigenvalues, float(eta))
    u = e.eigenvectors
    return _sym((u * lam) @ u.T)


def structure_subproblem(k, b, mu: float, epsilon: float) -> StructureProblem:
    """Assemble the subproblem data ``P = B^T K B + epsilon I``, ``M = P^{-1/2}``."""
    k = np.asarray(k, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.ndim != 2:
        raise InvalidInput("B must be 2-D (n, T)")
    n = b.shape[0]
    if k.shape != (n, n):
        raise InvalidInput(f"K must be {n}x{n} to match B, got {k.shape}")
    if not (np.all(np.isfinite(k)) and np.all(np.isfinite(b))):
        raise InvalidInput("K or B contains non-finite entries")
    if not np.isfinite(mu) or not 0.0 <= mu <= 1.0:
        raise InvalidInput("mu must lie in [0, 1]")
    if not np.isfinite(epsilon) or epsilon <= 0.0:
        raise InvalidInput("epsilon must be finite and > 0")
    t = b.shape[1]
    p = _sym(b.T @ (k @ b)) + epsilon * np.eye(t)
    e = sym_eig(p)
    w = e.eigenvalues
    if w[0] < 1e-12:
        raise NotInvertible(f"P has eigenvalue {w[0]:.3e}; epsilon too small to precondition")
    u = e.eigenvectors
    m = _sym((u / np.sqrt(w)) @ u.T)
    return StructureProblem(P=p, M=m, sigma=float(1.0 / w[0]), mu=float(mu))


def subproblem_objective(a, p, mu: float) -> float:
    """Value of ``tr(A^{-1} P) + mu tr(A) + (1 - mu) ||A||_1``.

    Returns ``inf`` when ``a`` is not strictly PD (useful for brute-force
    search over candidate matrices).
    """
    a = _sym(np.asarray(a, dtype=float))
    w, u = np.linalg.eigh(a)
    if w[0] <= 0.0:
        return float(np.inf)
    a_inv = (u / w) @ u.T
    return float(
        np.sum(a_inv * p) + mu * np.sum(w) + (1.0 - mu) * np.sum(np.abs(a))
    )


def _clamped_objective(a: np.ndarray, p: np.ndarray, mu: float, floor: float):
    """Eigenvalue-clamp ``a`` at ``floor`` and evaluate the subproblem objective."""
    w, u = np.linalg.eigh(_sym(a))
    wc = np.maximum(w, floor)
    ac = _sym((u * wc) @ u.T)
    a_inv = (u / wc) @ u.T
    obj = float(np.sum(a_inv * p) + mu * np.sum(wc) + (1.0 - mu) * np.sum(np.abs(ac)))
    return ac, obj


def _certified_gap(obj: float, d: np.ndarray, p: np.ndarray, m: np.ndarray, mu: float) -> float:
    """Upper bound on obj - optimum via a feasibility-repaired dual point.

    Dual value of a feasible D (D nsd, |M D M + mu I| <= 1 - mu entrywise)
    is 2 tr((-D)^(1/2)); D = -P is always feasible (M D M = -I).  The
    current dual iterate is projected to nsd and pulled toward -P until
    the entrywise box holds; both constraints are linear along the segment.
    """
    t = p.shape[0]
    eye = np.eye(t)
    w, v = np.linalg.eigh(_sym(d))
    d_nsd = (v * np.minimum(w, 0.0)) @ v.T
    b_mat = _sym(m @ d_nsd @ m) + mu * eye  # box values at t=1
    a_mat = (mu - 1.0) * eye  # box values at t=0 (anchor -P)
    c = 1.0 - mu
    delta = b_mat - a_mat
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi = np.where(b_mat > c, (c - a_mat) / delta, 1.0)
        t_lo = np.where(b_mat < -c, (-c - a_mat) / delta, 1.0)
    t_star = float(np.clip(min(np.min(t_hi), np.min(t_lo)), 0.0, 1.0))
    neg_d_feas = (1.0 - t_star) * p - t_star * d_nsd
    wf = np.linalg.eigvalsh(_sym(neg_d_feas))
    dual_value = 2.0 * float(np.sum(np.sqrt(np.maximum(wf, 0.0))))
    return max(obj - dual_value, 0.0)


def solve_structure(
    prob: StructureProblem,
    init: SplitState | None = None,
    inner_tol: float = 1e-7,
    max_inner: int = 10000,
    *,
    paper_dual_update: bool = False,
    snapshot_every: int = 10,
    eig_floor: float = 1e-10,
):
    """Run the primal-dual iteration on a structure subproblem.

    Parameters
    ----------
    prob : StructureProblem
        From :func:`structure_subproblem`.
    init : SplitState, optional
        Warm start; defaults to ``A = D = I``.
    inner_tol : float
        The loop stops once both the primal and the dual increment have
        Frobenius norm below this.
    max_inner : int
        Iteration cap.  Reaching it is not an error: the best iterate
        found is returned with ``diagnostics.converged = False``.

    Returns
    -------
    (StructureMatrix, SplitState, StructureDiagnostics)
        The structure matrix is the best objective among the clamped
        init, periodic clamped snapshots, and the final iterate — so its
        objective never exceeds the init's.  The state is the raw final
        iterate, suitable for warm-starting a later call.
    """
    if not np.isfinite(inner_tol) or inner_tol <= 0.0:
        raise InvalidInput("inner_tol must be finite and > 0")
    if max_inner < 1:
        raise InvalidInput("max_inner must be >= 1")
    if snapshot_every < 1:
        raise InvalidInput("snapshot_every must be >= 1")

    t = prob.n_tasks
    eye = np.eye(t)
    if init is None:
        a = eye.copy()
        d = eye.copy()
    else:
        if init.A.shape != (t, t):
            raise InvalidInput(f"warm start has shape {init.A.shape}, problem is {t}x{t}")
        a = init.A.copy()
        d = init.D.copy()

    p, m, mu, sigma = prob.P, prob.M, prob.mu, prob.sigma
    inv_sigma = 1.0 / sigma
    thr = (1.0 - mu) * inv_sigma
    mu_eye = mu * eye

    best_a, best_obj = _clamped_objective(a, p, mu, eig_floor)
    obj_init = best_obj
    best_iter = 0
    snapshots = [(0, best_obj)]

    primal_change = np.inf
    dual_change = np.inf
    converged = False
    it = 0
    while it < max_inner:
        it += 1
        g = _sym(m @ (d @ m))
        a_next = soft_threshold(a - inv_sigma * (mu_eye + g), thr)
        v = _sym(m @ ((2.0 * a_next - a) @ m))
        p_tilde = d + inv_sigma * v
        if not np.all(np.isfinite(p_tilde)):
            raise Diverged("structure solver produced non-finite iterates")
        prox = _prox_trace_inverse_eig(sigma * p_tilde, sigma)
        if paper_dual_update:
            d_next = p_tilde - prox
        else:
            d_next = p_tilde - inv_sigma * prox
        primal_change = float(np.linalg.norm(a_next - a))
        dual_change = float(np.linalg.norm(d_next - d))
        a, d = a_next, d_next
        if not np.isfinite(primal_change) or not np.isfinite(dual_change):
            raise Diverged("structure solver produced non-finite iterates")
        hit_tol = primal_change < inner_tol and dual_change < inner_tol
        if it % snapshot_every == 0 or hit_tol or it == max_inner:
            ac, obj = _clamped_objective(a, p, mu, eig_floor)
            snapshots.append((it, obj))
            if obj < best_obj:
                best_a, best_obj, best_iter = ac, obj, it
        if hit_tol:
            converged = True
            break

    gap = _certified_gap(best_obj, d, p, m, mu)
    diag = StructureDiagnostics(
        converged=converged,
        iterations=it,
        primal_change=primal_change,
        dual_change=dual_change,
        objective=best_obj,
        objective_init=obj_init,
        gap=gap,
        best_iteration=best_iter,
        snapshots=tuple(snapshots),
    )
    state = SplitState(
        A=a, D=d, iterations=it, primal_change=primal_change, dual_change=dual_change
    )
    return StructureMatrix(best_a, eig_floor=eig_floor), state, diag


def structure_from_graph(w, gamma: float) -> StructureMatrix:
    """Structure matrix ``(L + gamma I)^{-1}`` from a graph Laplacian ``L``.

    ``w`` is a symmetric nonnegative adjacency matrix with zero diagonal;
    ``L = diag(w @ 1) - w``.  Coupled tasks get positive co-variation.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InvalidInput("adjacency must be square")
    if not np.all(np.isfinite(w)):
        raise InvalidInput("adjacency contains non-finite entries")
    if np.any(w < 0.0):
        raise InvalidInput("adjacency must be nonnegative")
    if np.any(np.diag(w) != 0.0):
        raise InvalidInput("adjacency must have zero diagonal")
    if np.linalg.norm(w - w.T) > 1e-10 * max(1.0, np.linalg.norm(w)):
        raise InvalidInput("adjacency must be symmetric")
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise InvalidInput("gamma must be finite and > 0")
    lap = np.diag(w.sum(axis=1)) - _sym(w)
    t = w.shape[0]
    a = np.linalg.solve(lap + gamma * np.eye(t), np.eye(t))
    return StructureMatrix(_sym(a))


def structure_mean_variance(t: int, gamma: float) -> StructureMatrix:
    """Structure matrix ``(I + gamma * ones/T)^{-1}`` shrinking tasks to their mean.

    Closed form (rank-one update): ``I - (gamma / (T (1 + gamma))) * ones``.
    """
    if t < 1:
        raise InvalidInput("need at least one task")
    if not np.isfinite(gamma) or gamma < 0.0:
        raise InvalidInput("gamma must be finite and >= 0")
    a = np.eye(t) - (gamma / (t * (1.0 + gamma))) * np.ones((t, t))
    return StructureMatrix(a)


def structure_from_matrix(a, min_eig: float | None = None) -> StructureMatrix:
    """Nearest-in-eigenvalues SPD repair of a symmetric matrix.

    Eigenvalues below ``min_eig`` (default ``1e-6 * max(1, max eigenvalue)``)
    are raised to it.  Used to turn an externally supplied, possibly
    indefinite matrix into a usable fixed structure.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput("matrix must be square")
    e = sym_eig(a)
    w = e.eigenvalues
    if min_eig is None:
        min_eig = 1e-6 * max(1.0, float(w[-1]))
    if min_eig <= 0.0:
        raise InvalidInput("min_eig must be > 0")
    u = e.eigenvectors
    repaired = _sym((u * np.maximum(w, min_eig)) @ u.T)
    return StructureMatrix(repaired)
