"""Ranking and threshold metrics: ROC/AUC, precision-recall, confusion
counts, Dice overlap.

Tie policy is part of the contract: the AUC gives tied score pairs half
credit, and threshold comparisons are score >= threshold. The trapezoid
AUC is accumulated in exact integer arithmetic, so it equals the pairwise
ranking statistic bit for bit, not just approximately. Ratios with a zero
denominator are reported as None rather than being forced to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_tensor

__all__ = [
    "RocResult",
    "PrResult",
    "ConfusionCounts",
    "ConfusionMetrics",
    "roc_auc",
    "pr_curve",
    "confusion_metrics",
    "max_accuracy_threshold",
    "dice_score",
]


@dataclass(frozen=True)
class RocResult:
    """Operating points at every distinct score, plus the predict-nothing
    point (thresholds[0] is +inf, fpr/tpr start at 0)."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass(frozen=True)
class PrResult:
    thresholds: np.ndarray
    recall: np.ndarray
    precision: np.ndarray
    average_precision: float


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ConfusionMetrics:
    counts: ConfusionCounts
    accuracy: float
    precision: float | None
    sensitivity: float | None
    specificity: float | None


def _check_scored(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = as_tensor(scores, rank=1, name="scores")
    y = np.asarray(labels)
    if y.shape != s.shape:
        raise ValueError("scores and labels must have equal length")
    y = y.astype(np.float64)
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def _descending_groups(s: np.ndarray, y: np.ndarray):
    """Distinct scores descending with per-group positive/negative counts."""
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    boundaries = np.flatnonzero(np.diff(s_sorted) != 0.0)
    starts = np.concatenate([[0], boundaries + 1])
    stops = np.concatenate([boundaries + 1, [s.shape[0]]])
    thresholds = s_sorted[starts]
    pos = np.add.reduceat(y_sorted, starts)
    counts = stops - starts
    return thresholds, pos.astype(np.int64), (counts - pos).astype(np.int64)


def roc_auc(scores, labels) -> RocResult:
    """ROC curve over distinct-score thresholds and the exact AUC.

    The AUC numerator sum(delta_fp * (tp_prev + tp_cur)) is accumulated in
    integers and divided by 2*P*N once, which makes it exactly the pairwise
    statistic (wins + ties/2) / (P*N).
    """
    s, y = _check_scored(scores, labels)
    p_total = int(y.sum())
    n_total = int(y.shape[0] - p_total)
    if p_total == 0 or n_total == 0:
        raise ValueError("undefined AUC: both classes must be present")

    thresholds, pos, neg = _descending_groups(s, y)
    tp = np.concatenate([[0], np.cumsum(pos)])
    fp = np.concatenate([[0], np.cumsum(neg)])
    numerator = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = numerator / (2 * p_total * n_total)

    return RocResult(
        thresholds=np.concatenate([[np.inf], thresholds]),
        fpr=fp / n_total,
        tpr=tp / p_total,
        auc=auc,
    )


def pr_curve(scores, labels) -> PrResult:
    """Precision/recall at each distinct threshold descending.

    Average precision is the step sum over recall increments,
    sum (R_k - R_{k-1}) * P_k with R_0 = 0.
    """
    s, y = _check_scored(scores, labels)
    p_total = int(y.sum())
    if p_total == 0:
        raise ValueError("undefined average precision: no positive labels")

    thresholds, pos, neg = _descending_groups(s, y)
    tp = np.cumsum(pos)
    fp = np.cumsum(neg)
    recall = tp / p_total
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    average_precision = float(np.sum((recall - prev_recall) * precision))
    return PrResult(
        thresholds=thresholds,
        recall=recall,
        precision=precision,
        average_precision=average_precision,
    )


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def confusion_metrics(scores, labels, threshold: float) -> ConfusionMetrics:
    """Counts and ratios for the prediction rule score >= threshold."""
    s, y = _check_scored(scores, labels)
    pred = s >= float(threshold)
    actual = y == 1
    counts = ConfusionCounts(
        tp=int(np.sum(pred & actual)),
        fp=int(np.sum(pred & ~actual)),
        tn=int(np.sum(~pred & ~actual)),
        fn=int(np.sum(~pred & actual)),
    )
    return ConfusionMetrics(
        counts=counts,
        accuracy=(counts.tp + counts.tn) / counts.total,
        precision=_ratio(counts.tp, counts.tp + counts.fp),
        sensitivity=_ratio(counts.tp, counts.tp + counts.fn),
        specificity=_ratio(counts.tn, counts.tn + counts.fp),
    )


def max_accuracy_threshold(scores, labels) -> tuple[float, ConfusionMetrics]:
    """Highest threshold attaining maximum accuracy.

    Candidates are every distinct score plus one value above the maximum
    (the predict-nothing rule); scanning descending and keeping the first
    maximum makes the choice deterministic under ties.
    """
    s, y = _check_scored(scores, labels)
    candidates = np.concatenate([[s.max() + 1.0], np.unique(s)[::-1]])
    best_threshold = float(candidates[0])
    best = confusion_metrics(s, y, best_threshold)
    for threshold in candidates[1:]:
        current = confusion_metrics(s, y, float(threshold))
        if current.accuracy > best.accuracy:
            best_threshold, best = float(threshold), current
    return best_threshold, best


def dice_score(a, b) -> float:
    """Overlap 2|a&b| / (|a|+|b|); two empty masks count as agreement (1.0)."""
    x = np.asarray(a)
    z = np.asarray(b)
    if x.shape != z.shape:
        raise ValueError("dice_score: mask shapes differ")
    if x.size == 0:
        raise ValueError("dice_score: empty masks")
    for mask in (x, z):
        if not set(np.unique(mask.astype(np.float64))) <= {0.0, 1.0}:
            raise ValueError("dice_score: masks must be binary")
    xa = x.astype(bool)
    za = z.astype(bool)
    denom = int(xa.sum()) + int(za.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((xa & za).sum()) / denom
