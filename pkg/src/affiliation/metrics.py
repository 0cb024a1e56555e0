"""F1 and R^2 on held-out predictions, with degeneracy checks for tiny folds."""

from __future__ import annotations

import numpy as np


def _aligned(predictions, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty label sequences")
    return p, t


def f1_score(predictions, truth, positive=1) -> float:
    """F1 of the positive class; 0 when precision + recall is 0."""
    p, t = _aligned(predictions, truth)
    tp = np.count_nonzero((p == positive) & (t == positive))
    fp = np.count_nonzero((p == positive) & (t != positive))
    fn = np.count_nonzero((p != positive) & (t == positive))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(2 * precision * recall / (precision + recall))


def f1_degenerate(truth, positive=1) -> bool:
    """F1 is uninformative when the positive class is absent from the truth."""
    return not np.any(np.asarray(truth) == positive)


def r2_score(predictions, truth) -> float:
    """1 - SS_res / SS_tot about the evaluation-set mean; NaN if the truth is constant."""
    p, t = _aligned(predictions, truth)
    p = p.astype(float)
    t = t.astype(float)
    if t.size < 2:
        raise ValueError("R^2 needs at least two truth values")
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0:
        return float("nan")
    return 1.0 - float(np.sum((t - p) ** 2)) / ss_tot


def r2_degenerate(truth) -> bool:
    t = np.asarray(truth, dtype=float)
    return t.size < 2 or float(np.sum((t - t.mean()) ** 2)) == 0.0


def score(task: str, predictions, truth) -> tuple[float, bool]:
    """(value, degenerate) for the task's metric."""
    if task == "classify":
        return f1_score(predictions, truth), f1_degenerate(truth)
    deg = r2_degenerate(truth)
    return (float("nan") if deg else r2_score(predictions, truth)), deg
