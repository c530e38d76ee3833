import numpy as np
import pytest

from src.core.exceptions import UndefinedMetricError
from src.metrics.ranking import auc, xauc


def brute_force_xauc(pos, neg):
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def brute_force_auc(scores, labels):
    scores, labels = np.asarray(scores), np.asarray(labels)
    return brute_force_xauc(scores[labels == 1], scores[labels == 0])


@pytest.mark.parametrize(
    "scores, labels, expected",
    [([0.9, 0.1], [1, 0], 1.0), ([0.1, 0.9], [1, 0], 0.0), ([0.5, 0.5, 0.5], [1, 0, 1], 0.5)],
)
def test_auc_small_cases(scores, labels, expected):
    assert auc(scores, labels) == expected


def test_auc_single_class_is_undefined():
    with pytest.raises(UndefinedMetricError):
        auc([0.1, 0.2], [1, 1])


def test_xauc_empty_is_undefined():
    with pytest.raises(UndefinedMetricError):
        xauc([], [0.1])


def test_xauc_separated_sets():
    assert xauc([2.0, 3.0], [0.0, 1.0]) == 1.0


def test_xauc_on_one_group_is_auc():
    rng = np.random.default_rng(0)
    scores = rng.integers(0, 5, size=40).astype(float)
    labels = np.r_[np.ones(20), np.zeros(20)].astype(int)
    assert xauc(scores[labels == 1], scores[labels == 0]) == auc(scores, labels)


def test_fast_metrics_match_pair_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(500):
        n = rng.integers(2, 101)
        # Coarse integer scores force ties
        scores = rng.integers(0, rng.integers(2, 20), size=n).astype(float)
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 0, 1
        assert auc(scores, labels) == pytest.approx(brute_force_auc(scores, labels), abs=1e-12)
        pos, neg = scores[labels == 1], rng.normal(size=rng.integers(1, 30)).round(1)
        assert xauc(pos, neg) == pytest.approx(brute_force_xauc(pos, neg), abs=1e-12)


def test_negated_scores_complement_auc():
    rng = np.random.default_rng(2)
    scores = rng.normal(size=100)
    labels = rng.integers(0, 2, size=100)
    assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0)


def test_xauc_over_pooled_negatives_is_weighted_mean():
    rng = np.random.default_rng(3)
    pos = rng.normal(size=30)
    neg_a, neg_b = rng.normal(size=10), rng.normal(size=25)
    pooled = xauc(pos, np.r_[neg_a, neg_b])
    weighted = (10 * xauc(pos, neg_a) + 25 * xauc(pos, neg_b)) / 35
    assert pooled == pytest.approx(weighted)
