import numpy as np
import pytest
from numpy.testing import assert_allclose

from xaikit.metrics import (
    confusion_metrics,
    dice_score,
    max_accuracy_threshold,
    pr_curve,
    roc_auc,
)


def pairwise_auc(scores, labels):
    """Brute-force rank statistic: P(s_pos > s_neg) + 0.5 P(tie)."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0
    ties = 0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 2
            elif p == n:
                ties += 1
    # integer numerator keeps the oracle exact
    return (wins + ties) / (2.0 * len(pos) * len(neg))


class TestRocAuc:
    def test_worked_example(self):
        scores = np.array([0.1, 0.4, 0.35, 0.8])
        labels = np.array([0, 0, 1, 1])
        assert_allclose(roc_auc(scores, labels).auc, 0.75, atol=1e-12)

    def test_matches_pairwise_statistic_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            n = int(rng.integers(2, 120))
            labels = rng.integers(2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            # quantized scores force plenty of ties
            scores = np.round(rng.uniform(size=n), 2)
            assert roc_auc(scores, labels).auc == pairwise_auc(scores, labels)

    def test_perfect_and_inverted(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        labels = np.array([0, 0, 1, 1])
        assert roc_auc(scores, labels).auc == 1.0
        assert roc_auc(scores, 1 - labels).auc == 0.0

    def test_all_tied_scores(self):
        scores = np.full(6, 0.5)
        labels = np.array([0, 1, 0, 1, 0, 1])
        assert roc_auc(scores, labels).auc == 0.5

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        scores = rng.uniform(size=50)
        labels = rng.integers(2, size=50)
        labels[:2] = (0, 1)
        assert roc_auc(2.0 * scores + 3.0, labels).auc == roc_auc(scores, labels).auc

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            roc_auc(np.array([0.1, 0.2]), np.array([1, 1]))

    def test_curve_shape(self):
        rng = np.random.default_rng(2)
        scores = rng.uniform(size=30)
        labels = rng.integers(2, size=30)
        labels[:2] = (0, 1)
        result = roc_auc(scores, labels)
        assert np.isinf(result.thresholds[0])
        assert result.fpr[0] == 0.0 and result.tpr[0] == 0.0
        assert result.fpr[-1] == 1.0 and result.tpr[-1] == 1.0
        assert np.all(np.diff(result.fpr) >= 0)
        assert np.all(np.diff(result.tpr) >= 0)

    def test_trapezoid_over_curve_equals_auc(self):
        rng = np.random.default_rng(3)
        scores = np.round(rng.uniform(size=80), 1)
        labels = rng.integers(2, size=80)
        labels[:2] = (0, 1)
        result = roc_auc(scores, labels)
        assert_allclose(np.trapezoid(result.tpr, result.fpr), result.auc, atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            roc_auc(np.array([0.1, 0.2]), np.array([0, 1, 1]))

    def test_nonbinary_labels(self):
        with pytest.raises(ValueError, match="0 or 1"):
            roc_auc(np.array([0.1, 0.2]), np.array([0, 2]))


class TestPrCurve:
    def test_hand_value(self):
        scores = np.array([0.9, 0.8, 0.7])
        labels = np.array([1, 0, 1])
        result = pr_curve(scores, labels)
        assert_allclose(result.average_precision, 5.0 / 6.0, atol=1e-12)

    def test_perfect_ranking(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, 0, 0])
        assert pr_curve(scores, labels).average_precision == 1.0

    def test_no_positives_rejected(self):
        with pytest.raises(ValueError, match="no positive"):
            pr_curve(np.array([0.1, 0.2]), np.array([0, 0]))

    def test_step_sum_reproduces_ap(self):
        rng = np.random.default_rng(4)
        scores = rng.uniform(size=40)
        labels = rng.integers(2, size=40)
        labels[:2] = (0, 1)
        result = pr_curve(scores, labels)
        assert result.recall[-1] == 1.0
        prev = np.concatenate([[0.0], result.recall[:-1]])
        ap = float(np.sum((result.recall - prev) * result.precision))
        assert_allclose(ap, result.average_precision, atol=1e-15)

    def test_recall_monotone(self):
        rng = np.random.default_rng(5)
        scores = np.round(rng.uniform(size=50), 1)
        labels = rng.integers(2, size=50)
        labels[:2] = (0, 1)
        result = pr_curve(scores, labels)
        assert np.all(np.diff(result.recall) >= 0)


class TestConfusionMetrics:
    def test_hand_counts(self):
        scores = np.array([0.9, 0.8, 0.7, 0.6, 0.3, 0.2, 0.1, 0.05, 0.45, 0.4])
        labels = np.array([1, 1, 1, 0, 1, 1, 0, 0, 0, 0])
        m = confusion_metrics(scores, labels, 0.5)
        c = m.counts
        assert (c.tp, c.fp, c.tn, c.fn) == (3, 1, 4, 2)
        assert_allclose(m.accuracy, 0.7, atol=1e-12)
        assert_allclose(m.precision, 0.75, atol=1e-12)
        assert_allclose(m.sensitivity, 0.6, atol=1e-12)
        assert_allclose(m.specificity, 0.8, atol=1e-12)

    def test_threshold_is_inclusive(self):
        # a score equal to the threshold counts as positive
        m = confusion_metrics(np.array([0.5, 0.4]), np.array([1, 0]), 0.5)
        c = m.counts
        assert (c.tp, c.fp, c.tn, c.fn) == (1, 0, 1, 0)

    def test_zero_denominators_become_none(self):
        m = confusion_metrics(np.array([0.1, 0.2]), np.array([0, 0]), 0.5)
        assert m.sensitivity is None
        assert m.precision is None
        assert m.specificity == 1.0

    def test_counts_total(self):
        m = confusion_metrics(np.array([0.9, 0.1, 0.6, 0.4]), np.array([1, 0, 0, 1]), 0.5)
        assert m.counts.total == 4


class TestMaxAccuracyThreshold:
    def test_separable_data(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        labels = np.array([0, 0, 1, 1])
        threshold, best = max_accuracy_threshold(scores, labels)
        assert best.accuracy == 1.0
        assert 0.2 < threshold <= 0.8

    def test_never_beaten_by_grid_scan(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            scores = np.round(rng.uniform(size=25), 2)
            labels = rng.integers(2, size=25)
            labels[:2] = (0, 1)
            threshold, best = max_accuracy_threshold(scores, labels)
            assert confusion_metrics(scores, labels, threshold).accuracy == best.accuracy
            for probe in np.linspace(-0.1, 1.1, 241):
                other = confusion_metrics(scores, labels, float(probe)).accuracy
                assert other <= best.accuracy + 1e-12

    def test_prefers_highest_threshold_on_ties(self):
        # all-negative data: predict-nothing already attains accuracy 1
        scores = np.array([0.3, 0.6])
        labels = np.array([0, 1])
        threshold, best = max_accuracy_threshold(scores, labels)
        assert best.accuracy == 1.0
        assert threshold == 0.6


class TestDiceScore:
    def test_hand_value(self):
        a = np.array([[1, 1, 0], [0, 0, 0]])
        b = np.array([[1, 0, 0], [1, 0, 0]])
        assert_allclose(dice_score(a, b), 0.5, atol=1e-12)

    def test_identical_masks(self):
        rng = np.random.default_rng(7)
        a = (rng.uniform(size=(5, 7)) > 0.5).astype(np.int64)
        assert dice_score(a, a) == 1.0

    def test_disjoint_masks(self):
        assert dice_score(np.array([[1, 0]]), np.array([[0, 1]])) == 0.0

    def test_both_empty_is_perfect(self):
        z = np.zeros((3, 3))
        assert dice_score(z, z) == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        a = (rng.uniform(size=(4, 4)) > 0.4).astype(np.int64)
        b = (rng.uniform(size=(4, 4)) > 0.6).astype(np.int64)
        assert dice_score(a, b) == dice_score(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes differ"):
            dice_score(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_nonbinary_rejected(self):
        with pytest.raises(ValueError, match="binary"):
            dice_score(np.array([[0.5]]), np.array([[1.0]]))
