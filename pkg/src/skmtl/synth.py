"""Synthetic multi-task benchmark generator.

Each instance is a linear vector-valued model ``y^T = x^T U A + noise``
with ``U`` a random orthonormal d x T frame and ``A`` a symmetric PSD
matrix with a controlled support ratio (fraction of nonzero entries,
diagonal always included).  The published structure matrix comes in two
flavors: ``A_true`` (exact support) and ``A_corrupted`` — A_true plus
symmetric Gaussian noise with per-entry variance one tenth of the mean
absolute nonzero entry, then floored back onto the PD cone with the
same eigenvalue repair ``structure_from_matrix`` applies.  The
corrupted matrix actually generates the data, so the target structure
is never exactly sparse, and a fixed-structure fit on ``A_corrupted``
is exactly well-specified.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInput
from .model import Dataset
from .structure import structure_from_matrix

__all__ = ["SynthConfig", "SynthInstance", "generate", "sparsity_sweep", "support_target"]


@dataclass(frozen=True)
class SynthConfig:
    """Settings for one synthetic instance.

    ``support_ratio`` is the fraction of the T*T entries of ``A_true``
    that are nonzero; it must allow at least the T diagonal entries.
    ``corrupt=False`` forces ``A_corrupted = A_true`` (the same random
    draws are consumed either way, so toggling it changes nothing else).
    """

    T: int
    support_ratio: float
    d: int = 100
    n_train: int = 50
    n_test: int = 100
    noise_var: float = 0.1
    seed: int = 0
    corrupt: bool = True

    def __post_init__(self):
        if self.T < 1:
            raise InvalidInput("T must be >= 1")
        if self.d < self.T:
            raise InvalidInput(f"d={self.d} must be >= T={self.T} for an orthonormal frame")
        if not np.isfinite(self.support_ratio) or not 0.0 < self.support_ratio <= 1.0:
            raise InvalidInput("support_ratio must lie in (0, 1]")
        if self.n_train < 1 or self.n_test < 1:
            raise InvalidInput("n_train and n_test must be >= 1")
        if not np.isfinite(self.noise_var) or self.noise_var < 0.0:
            raise InvalidInput("noise_var must be finite and >= 0")
        if self.seed < 0:
            raise InvalidInput("seed must be a nonnegative integer")
        support_target(self.T, self.support_ratio)  # validates coverage


@dataclass(frozen=True)
class SynthInstance:
    train: Dataset
    test: Dataset
    A_true: np.ndarray
    A_corrupted: np.ndarray
    U: np.ndarray
    config: SynthConfig = field(repr=False)


def support_target(t: int, ratio: float) -> int:
    """Number of nonzero entries of A_true for a given ratio.

    ``round(ratio * T^2)``, bumped by one when the off-diagonal count
    would be odd (symmetric patterns need an even number off the
    diagonal).  Fewer entries than the diagonal is an error.
    """
    target = int(round(ratio * t * t))
    if target < t:
        raise InvalidInput(
            f"support_ratio {ratio} gives {target} entries; cannot cover the {t}-entry diagonal"
        )
    if (target - t) % 2 == 1:
        target = target + 1 if target + 1 <= t * t else target - 1
    return target


def _support_mask(rng: np.random.Generator, t: int, target: int) -> np.ndarray:
    mask = np.eye(t, dtype=bool)
    iu, ju = np.triu_indices(t, k=1)
    k = (target - t) // 2
    if k:
        chosen = rng.choice(iu.size, size=k, replace=False)
        mask[iu[chosen], ju[chosen]] = True
        mask[ju[chosen], iu[chosen]] = True
    return mask


def _patterned_psd(rng: np.random.Generator, mask: np.ndarray, target: int) -> np.ndarray:
    """Symmetric PSD matrix with exactly the masked support.

    Gaussian symmetric fill, eigenvalue clamp at zero, re-zero outside
    the pattern; when a single clamp/re-zero pass leaves a materially
    indefinite matrix the two projections are alternated to convergence.
    If that drives an in-pattern entry to exact zero, a sign-aligned
    diagonally dominant matrix with the same pattern is added — PSD by
    Gershgorin, so positivity and the exact support are both restored.
    """
    t = mask.shape[0]
    g = rng.standard_normal((t, t))
    a = np.where(mask, 0.5 * (g + g.T), 0.0)
    for _ in range(1000):
        w, v = np.linalg.eigh(a)
        if w[0] >= -1e-10:
            break
        a = (v * np.maximum(w, 0.0)) @ v.T
        a = np.where(mask, 0.5 * (a + a.T), 0.0)
    if int(np.count_nonzero(a)) != target:
        signs = np.where(a != 0.0, np.sign(a), 1.0)
        nonzero = np.abs(a[a != 0.0])
        delta = 0.05 * float(np.median(nonzero)) if nonzero.size else 0.1
        delta = max(delta, 1e-6)
        row_off = int(np.max(np.sum(mask & ~np.eye(t, dtype=bool), axis=1), initial=0))
        d_mat = np.where(mask, delta * signs, 0.0)
        np.fill_diagonal(d_mat, delta * (1.0 + row_off) + np.diag(a) * 0.0)
        a = a + d_mat
        a = np.where(mask, 0.5 * (a + a.T), 0.0)
    w_min = float(np.linalg.eigvalsh(a)[0])
    if w_min < 0.0:
        # nano-shift absorbs residual round-off; diagonal is in-pattern
        a = a + (-w_min + 1e-12) * np.eye(t)
    return a


def generate(cfg: SynthConfig) -> SynthInstance:
    """Draw one instance.  Deterministic given ``cfg.seed``.

    Draw order (single generator): U frame, support pattern, structure
    values, corruption noise, train inputs, train noise, test inputs,
    test noise.
    """
    rng = np.random.default_rng(cfg.seed)
    t, d = cfg.T, cfg.d

    g = rng.standard_normal((d, t))
    u, r = np.linalg.qr(g)
    diag_sign = np.sign(np.diag(r))
    diag_sign[diag_sign == 0.0] = 1.0
    u = u * diag_sign

    target = support_target(t, cfg.support_ratio)
    mask = _support_mask(rng, t, target)
    a_true = _patterned_psd(rng, mask, target)

    nonzero = np.abs(a_true[a_true != 0.0])
    noise_scale = float(np.sqrt(0.1 * np.mean(nonzero))) if nonzero.size else 0.0
    raw = rng.standard_normal((t, t)) * noise_scale
    sym_noise = np.triu(raw) + np.triu(raw, 1).T
    if cfg.corrupt:
        # the noisy sum is indefinite with high probability at sparse
        # ratios; floor it so the generator is itself a valid structure
        # matrix (identical to the repair a fixed-structure fit applies)
        a_corrupted = structure_from_matrix(a_true + sym_noise).A
    else:
        a_corrupted = a_true.copy()

    generator = u @ a_corrupted
    x_train = rng.standard_normal((cfg.n_train, d))
    e_train = rng.standard_normal((cfg.n_train, t)) * np.sqrt(cfg.noise_var)
    y_train = x_train @ generator + e_train
    x_test = rng.standard_normal((cfg.n_test, d))
    e_test = rng.standard_normal((cfg.n_test, t)) * np.sqrt(cfg.noise_var)
    y_test = x_test @ generator + e_test

    return SynthInstance(
        train=Dataset(X=x_train, Y=y_train),
        test=Dataset(X=x_test, Y=y_test),
        A_true=a_true,
        A_corrupted=a_corrupted,
        U=u,
        config=cfg,
    )


def derived_seed(base_seed: int, index: int) -> int:
    """Deterministic child seed for sweep instance ``index``."""
    ss = np.random.SeedSequence([int(base_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def sparsity_sweep(
    base: SynthConfig, ratios, T_values, replicates: int
) -> list[SynthInstance]:
    """Instances for the Cartesian product ratios x T_values x replicates.

    Ordered by ratio, then T, then replicate; each instance gets a child
    seed derived from ``base.seed`` and its flat index.
    """
    ratios = list(ratios)
    T_values = [int(t) for t in T_values]
    if not ratios or not T_values:
        raise InvalidInput("ratios and T_values must be nonempty")
    for r in ratios:
        if not np.isfinite(r) or not 0.0 < r <= 1.0:
            raise InvalidInput(f"ratio {r} outside (0, 1]")
    if replicates < 1:
        raise InvalidInput("replicates must be >= 1")
    out = []
    index = 0
    for r in ratios:
        for t in T_values:
            for _ in range(replicates):
                cfg = replace(
                    base, support_ratio=float(r), T=t, seed=derived_seed(base.seed, index)
                )
                out.append(generate(cfg))
                index += 1
    return out
