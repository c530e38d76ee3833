from dataclasses import asdict, dataclass

import numpy as np
import numpy.typing as npt

from src.core.exceptions import UndefinedMetricError
from src.core.types import Cohort
from src.metrics.ranking import auc, xauc
from src.synthgen.dgp import censorship_rate, missed_positive_rate

# Metrics stored as fractions; the reporting layer converts these to percentage points
RANKING_METRICS = ("auc_overall", "auc_0", "auc_1", "xauc_01", "xauc_10", "delta_auc", "delta_xauc")
RATE_METRICS = (
    "missed_positive_rate_0",
    "missed_positive_rate_1",
    "missed_positive_rate_all",
    "censorship_rate_0",
    "censorship_rate_1",
)


@dataclass(frozen=True)
class GapReport:
    """Ranking performance by group on true labels, with the censoring that produced it."""

    auc_overall: float
    auc_0: float
    auc_1: float
    xauc_01: float
    xauc_10: float
    delta_auc: float
    delta_xauc: float
    missed_positive_rate_0: float
    missed_positive_rate_1: float
    missed_positive_rate_all: float
    censorship_rate_0: float
    censorship_rate_1: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClassGroupWeights:
    """p_y(a) = P(A=a | Y=y); index [y][a]."""

    p: tuple[tuple[float, float], tuple[float, float]]

    def __call__(self, y: int, a: int) -> float:
        return self.p[y][a]


@dataclass(frozen=True)
class CiSummary:
    median: float
    lower: float
    upper: float


def class_group_weights(groups: npt.ArrayLike, labels: npt.ArrayLike) -> ClassGroupWeights:
    groups = np.asarray(groups)
    labels = np.asarray(labels)
    rows = []
    for y in (0, 1):
        in_class = labels == y
        if not in_class.any():
            raise UndefinedMetricError(f"no patients with label {y}; class-group weights undefined")
        rows.append(tuple(float(np.mean(groups[in_class] == a)) for a in (0, 1)))
    return ClassGroupWeights(p=tuple(rows))


def gap_report(cohort: Cohort, eval_labels: str = "true") -> GapReport:
    """
    AUC, xAUC and their group gaps for the cohort's scores, evaluated on true labels y.

    xauc_01 ranks group-0 positives against group-1 negatives; xauc_10 the reverse.
    """
    if eval_labels != "true":
        raise ValueError("gap reports evaluate on true labels only (eval_labels='true')")
    if cohort.score is None:
        raise ValueError("cohort has no scores; call Cohort.with_scores first")

    s, y, a = cohort.score, cohort.y, cohort.group
    for group in (0, 1):
        for label, name in ((1, "positives"), (0, "negatives")):
            if not np.any((a == group) & (y == label)):
                raise UndefinedMetricError(f"group {group} has no {name} (y={label}); gap metrics undefined")

    def slice_(group, label):
        return s[(a == group) & (y == label)]

    auc_0 = xauc(slice_(0, 1), slice_(0, 0))
    auc_1 = xauc(slice_(1, 1), slice_(1, 0))
    xauc_01 = xauc(slice_(0, 1), slice_(1, 0))
    xauc_10 = xauc(slice_(1, 1), slice_(0, 0))
    return GapReport(
        auc_overall=auc(s, y),
        auc_0=auc_0,
        auc_1=auc_1,
        xauc_01=xauc_01,
        xauc_10=xauc_10,
        delta_auc=abs(auc_1 - auc_0),
        delta_xauc=abs(xauc_01 - xauc_10),
        missed_positive_rate_0=missed_positive_rate(cohort, 0),
        missed_positive_rate_1=missed_positive_rate(cohort, 1),
        missed_positive_rate_all=missed_positive_rate(cohort, None),
        censorship_rate_0=censorship_rate(cohort, 0),
        censorship_rate_1=censorship_rate(cohort, 1),
    )


def decomposition_residual(report: GapReport, weights: ClassGroupWeights) -> float:
    """
    |AUC - sum over (positive group, negative group) of p_1(a) p_0(a') AUC_{a,a'}|.

    Terms with zero weight are skipped, so a single-group cohort may carry NaN for the
    absent group's metrics.
    """
    for y in (0, 1):
        total = weights(y, 0) + weights(y, 1)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class-group weights for y={y} sum to {total}, expected 1")
    terms = (
        (weights(1, 0) * weights(0, 0), report.auc_0),
        (weights(1, 1) * weights(0, 1), report.auc_1),
        (weights(1, 1) * weights(0, 0), report.xauc_10),
        (weights(1, 0) * weights(0, 1), report.xauc_01),
    )
    combined = sum(w * value for w, value in terms if w > 0)
    return abs(report.auc_overall - combined)


def empirical_ci(values: npt.ArrayLike) -> CiSummary:
    """Median with 2.5th/97.5th percentiles, linear interpolation between order statistics."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("empirical_ci needs at least one value")
    median, lower, upper = np.percentile(values, [50.0, 2.5, 97.5])
    return CiSummary(median=float(median), lower=float(lower), upper=float(upper))
