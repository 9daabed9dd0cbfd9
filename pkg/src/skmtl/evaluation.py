"""Metrics and structure exports.

nMSE is per-task mean squared error normalized by the per-task
population variance of the true outputs, averaged over tasks.  Support
recovery compares thresholded entry supports of two structure matrices
(diagonal included).  Graphs are exported as undirected DOT documents,
heatmaps as bare CSV grids.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, ZeroVariance

__all__ = [
    "RAW",
    "ABS",
    "SupportRecovery",
    "nmse",
    "accuracy",
    "support_recovery",
    "export_structure_graph",
    "heatmap_csv",
]

RAW = "raw"
ABS = "abs"


def _as_2d(name, z):
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise InvalidInput(f"{name} must be 2-dimensional, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InvalidInput(f"{name} must be finite")
    return z


def nmse(y_true, y_pred) -> float:
    """Normalized mean squared error, averaged over tasks.

    Per task: MSE(Y_true[:, t], Y_pred[:, t]) divided by the population
    variance of Y_true[:, t].  A task with zero variance in the true
    outputs raises ZeroVariance.
    """
    y_true = _as_2d("Y_true", y_true)
    y_pred = _as_2d("Y_pred", y_pred)
    if y_true.shape != y_pred.shape:
        raise InvalidInput(f"shape mismatch {y_true.shape} vs {y_pred.shape}")
    if y_true.shape[0] < 1:
        raise InvalidInput("need at least one sample")
    var = np.var(y_true, axis=0)
    if np.any(var <= 0.0):
        t = int(np.argmin(var))
        raise ZeroVariance(f"task {t} has zero variance in Y_true")
    mse = np.mean((y_true - y_pred) ** 2, axis=0)
    return float(np.mean(mse / var))


def accuracy(labels_true, scores) -> float:
    """Fraction of rows whose argmax score matches the class id.

    Ties go to the lowest index.
    """
    scores = _as_2d("scores", scores)
    labels = np.asarray(labels_true)
    if labels.ndim != 1:
        raise InvalidInput("labels_true must be a vector")
    if labels.size == 0 or scores.shape[0] == 0:
        raise InvalidInput("empty input")
    if labels.size != scores.shape[0]:
        raise InvalidInput(
            f"{labels.size} labels for {scores.shape[0]} score rows"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        cast = labels.astype(int)
        if not np.array_equal(cast, labels):
            raise InvalidInput("labels_true must be integers")
        labels = cast
    t = scores.shape[1]
    if np.any(labels < 0) or np.any(labels >= t):
        raise InvalidInput(f"class ids must lie in [0, {t})")
    return float(np.mean(np.argmax(scores, axis=1) == labels))


@dataclass(frozen=True)
class SupportRecovery:
    """Entry-set comparison of an estimated vs true structure support."""

    precision: float
    recall: float
    f1: float
    threshold: float
    estimated_support: frozenset
    true_support: frozenset


def support_recovery(a_est, a_true, threshold=None) -> SupportRecovery:
    """Precision/recall/F1 of the thresholded support of ``a_est``.

    Estimated support: entries with ``|A_est| > threshold``; true
    support: exactly nonzero entries of ``a_true``.  Default threshold
    is 1e-3 * max|A_est| (soft-thresholding yields exact zeros but the
    final eigenvalue clamp can reintroduce dust).
    """
    a_est = _as_2d("A_est", a_est)
    a_true = _as_2d("A_true", a_true)
    if a_est.shape != a_true.shape:
        raise InvalidInput(f"shape mismatch {a_est.shape} vs {a_true.shape}")
    if threshold is None:
        threshold = 1e-3 * float(np.max(np.abs(a_est), initial=0.0))
    threshold = float(threshold)
    if not np.isfinite(threshold) or threshold < 0.0:
        raise InvalidInput("threshold must be finite and >= 0")
    est = frozenset(zip(*np.nonzero(np.abs(a_est) > threshold)))
    true = frozenset(zip(*np.nonzero(a_true)))
    est = frozenset((int(i), int(j)) for i, j in est)
    true = frozenset((int(i), int(j)) for i, j in true)
    tp = len(est & true)
    precision = tp / len(est) if est else (1.0 if not true else 0.0)
    recall = tp / len(true) if true else (1.0 if not est else 0.0)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return SupportRecovery(
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        threshold=threshold,
        estimated_support=est,
        true_support=true,
    )


def export_structure_graph(a, labels, threshold=0.0) -> str:
    """Undirected DOT graph of the structure matrix.

    One node per task (label attribute from ``labels``); an edge t -- s
    for t < s whenever |A[t, s]| > threshold, carrying weight=|A[t, s]|
    with 6 significant digits.  Node and edge order is ascending, so the
    output is byte-identical for identical inputs.
    """
    a = _as_2d("A", a)
    t = a.shape[0]
    if a.shape[1] != t:
        raise InvalidInput("A must be square")
    labels = list(labels)
    if len(labels) != t:
        raise InvalidInput(f"{len(labels)} labels for {t} tasks")
    threshold = float(threshold)
    if not np.isfinite(threshold) or threshold < 0.0:
        raise InvalidInput("threshold must be finite and >= 0")
    lines = ["graph structure {"]
    for i in range(t):
        lab = str(labels[i]).replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  t{i} [label="{lab}"];')
    for i in range(t):
        for j in range(i + 1, t):
            w = abs(a[i, j])
            if w > threshold:
                lines.append(f"  t{i} -- t{j} [weight={w:.6g}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def heatmap_csv(a, mode=RAW) -> str:
    """CSV grid of the matrix entries, 10 significant digits.

    ``mode`` is "raw" or "abs" (absolute values).
    """
    a = _as_2d("A", a)
    if mode not in (RAW, ABS):
        raise InvalidInput(f"mode must be '{RAW}' or '{ABS}', got {mode!r}")
    vals = np.abs(a) if mode == ABS else a
    return "\n".join(",".join(f"{v:.10g}" for v in row) for row in vals)
