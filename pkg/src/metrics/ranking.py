import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata

from src.core.exceptions import UndefinedMetricError


def auc(scores: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """
    Probability a random positive outranks a random negative, ties counted as 1/2.

    Mann-Whitney U from average ranks: U = R_pos - n_pos (n_pos + 1) / 2.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} are misaligned")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )
    ranks = rankdata(scores, method="average")
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def xauc(scores_pos: npt.ArrayLike, scores_neg: npt.ArrayLike) -> float:
    """
    Probability a positive from one group outranks a negative from another, ties counted as 1/2.

    O((n + m) log m) via searchsorted on the sorted negatives.
    """
    pos = np.asarray(scores_pos, dtype=np.float64).ravel()
    neg = np.sort(np.asarray(scores_neg, dtype=np.float64).ravel())
    if pos.size == 0 or neg.size == 0:
        raise UndefinedMetricError(
            f"xAUC needs nonempty positive and negative sets, got {pos.size} and {neg.size}"
        )
    below = np.searchsorted(neg, pos, side="left")
    at_or_below = np.searchsorted(neg, pos, side="right")
    wins = below.sum() + 0.5 * (at_or_below - below).sum()
    return float(wins / (pos.size * neg.size))
