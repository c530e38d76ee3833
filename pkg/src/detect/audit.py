"""
Decision tree for whether disparate censorship can open a ranking gap.

Four conditions are walked in order:
  1. the groups differ marginally in covariates (per-covariate KS tests),
  2. the higher-risk group is undertested (threshold estimates per group),
  3. the groups' decision boundaries differ,
  4. censorship and decision boundaries are parallel.
Conditions 3 and 4 have no data-only test; they are decided only when the caller
supplies ground-truth linear boundaries.
"""

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import numpy.typing as npt
import polars as pl

from src.core.exceptions import SchemaError
from src.detect.hypothesis_tests import bonferroni, ks_two_sample
from src.detect.threshold import DEFAULT_C_GRID, default_tau_grid, estimate_threshold
from src.synthgen.cohort_io import covariate_columns as cohort_covariate_columns
from src.theory.boundaries import LinearBoundaries, check_parallel_boundaries, decision_boundaries_differ

NO_GAP_EXPECTED = "no-gap-expected"
GAP_RISK = "gap-risk"
INCONCLUSIVE = "inconclusive"

MARGINAL_DIFFERENCE = 1
HIGH_RISK_UNDERTESTED = 2
CONDITIONAL_DIFFERENCE = 3
PARALLEL_BOUNDARIES = 4

CONDITION_NAMES = {
    MARGINAL_DIFFERENCE: "marginal difference",
    HIGH_RISK_UNDERTESTED: "high-risk group undertested",
    CONDITIONAL_DIFFERENCE: "conditional difference",
    PARALLEL_BOUNDARIES: "parallel boundaries",
}

# Threshold estimates closer than this count as equal
THRESHOLD_GAP_TOL = 1e-9


@dataclass(frozen=True)
class ConditionResult:
    """holds is None when the condition could not be decided from the inputs."""

    condition: int
    holds: bool | None
    reason: str
    detail: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return CONDITION_NAMES[self.condition]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["name"] = self.name
        return out


@dataclass(frozen=True)
class AuditVerdict:
    verdict: str
    reason: str
    conditions: tuple[ConditionResult, ...]
    undetermined: tuple[int, ...] = ()

    def condition(self, number: int) -> ConditionResult:
        return next(c for c in self.conditions if c.condition == number)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "undetermined": list(self.undetermined),
            "conditions": [c.to_dict() for c in self.conditions],
        }


def _undetermined(condition: int, reason: str) -> ConditionResult:
    return ConditionResult(condition, None, reason)


def check_marginal_difference(covariates, alpha: float) -> ConditionResult:
    """Per-covariate KS tests at alpha / m; holds if any covariate differs."""
    if covariates is None:
        return _undetermined(MARGINAL_DIFFERENCE, "no covariates supplied")
    X0, X1 = (np.atleast_2d(np.asarray(X, dtype=np.float64)) for X in covariates)
    if X0.ndim != 2 or X1.ndim != 2 or X0.shape[1] != X1.shape[1]:
        raise ValueError(f"group covariate matrices disagree in width: {X0.shape} vs {X1.shape}")
    m = X0.shape[1]
    corrected = bonferroni(alpha, m)
    tests = []
    for j in range(m):
        if np.ptp(np.concatenate([X0[:, j], X1[:, j]])) == 0.0:
            warnings.warn(f"covariate {j + 1} is constant across both groups", UserWarning)
        statistic, p_value = ks_two_sample(X0[:, j], X1[:, j])
        tests.append({"covariate": j + 1, "statistic": statistic, "p_value": p_value})
    differing = [t["covariate"] for t in tests if t["p_value"] < corrected]
    reason = (
        f"covariates {differing} differ between groups"
        if differing
        else "no covariate differs between groups"
    )
    return ConditionResult(
        MARGINAL_DIFFERENCE,
        bool(differing),
        reason,
        {"alpha": corrected, "tests": tests},
    )


def check_high_risk_undertested(
    scores,
    tested,
    high_risk_group: int | None = None,
    tau_grid: npt.ArrayLike | None = None,
    c_grid: npt.ArrayLike | None = None,
) -> ConditionResult:
    """
    Fit the threshold testing law per group on a shared grid.

    The high-risk group is `high_risk_group` when given, else the group with the higher
    mean score. Holds when that group's threshold estimate exceeds the other's.
    """
    if scores is None or tested is None:
        missing = "scores" if scores is None else "tested flags"
        return _undetermined(HIGH_RISK_UNDERTESTED, f"no {missing} supplied")
    s = [np.asarray(v, dtype=np.float64).ravel() for v in scores]
    t = [np.asarray(v).ravel() for v in tested]
    if tau_grid is None:
        tau_grid = default_tau_grid(np.concatenate(s))
    c_grid = DEFAULT_C_GRID if c_grid is None else c_grid

    if high_risk_group is None:
        means = [float(np.mean(v)) for v in s]
        if means[0] == means[1]:
            return _undetermined(
                HIGH_RISK_UNDERTESTED,
                "groups have equal mean scores; supply the high-risk group",
            )
        high_risk_group = int(np.argmax(means))
        source = "mean score"
    else:
        if high_risk_group not in (0, 1):
            raise ValueError(f"high_risk_group must be 0 or 1, got {high_risk_group}")
        source = "caller"

    estimates = [estimate_threshold(s[a], t[a], c_grid=c_grid, tau_grid=tau_grid) for a in (0, 1)]
    low = 1 - high_risk_group
    gap = estimates[high_risk_group].tau_hat - estimates[low].tau_hat
    holds = gap > THRESHOLD_GAP_TOL
    reason = (
        f"group {high_risk_group} (higher risk) has the higher censorship threshold"
        if holds
        else f"group {high_risk_group} (higher risk) is not undertested"
    )
    return ConditionResult(
        HIGH_RISK_UNDERTESTED,
        bool(holds),
        reason,
        {
            "high_risk_group": high_risk_group,
            "high_risk_source": source,
            "threshold_gap": float(gap),
            "estimates": {a: estimates[a].to_dict() for a in (0, 1)},
        },
    )


def check_boundaries(boundaries: LinearBoundaries | None) -> tuple[ConditionResult, ConditionResult]:
    if boundaries is None:
        reason = "requires domain knowledge"
        return (
            _undetermined(CONDITIONAL_DIFFERENCE, reason),
            _undetermined(PARALLEL_BOUNDARIES, reason),
        )
    differ = decision_boundaries_differ(boundaries)
    parallel = check_parallel_boundaries(boundaries)
    return (
        ConditionResult(
            CONDITIONAL_DIFFERENCE,
            differ,
            "decision boundaries differ by group" if differ else "decision boundaries coincide",
        ),
        ConditionResult(
            PARALLEL_BOUNDARIES,
            parallel.parallel,
            "censorship and decision boundaries are parallel"
            if parallel.parallel
            else f"group {parallel.group} decision boundary is not parallel to the censorship boundary",
            parallel.to_dict(),
        ),
    )


def decide(conditions: list[ConditionResult]) -> AuditVerdict:
    c = {r.condition: r.holds for r in conditions}
    undetermined = tuple(r.condition for r in conditions if r.holds is None)

    if c[MARGINAL_DIFFERENCE] and c[HIGH_RISK_UNDERTESTED]:
        return AuditVerdict(GAP_RISK, "high-risk group undertested", tuple(conditions), undetermined)
    if c[PARALLEL_BOUNDARIES] is False and c[CONDITIONAL_DIFFERENCE] is not False:
        return AuditVerdict(
            GAP_RISK, "censorship and decision boundaries not parallel", tuple(conditions), undetermined
        )
    evaluated = c[MARGINAL_DIFFERENCE] is not None and c[HIGH_RISK_UNDERTESTED] is not None
    if evaluated and c[PARALLEL_BOUNDARIES] is not False:
        return AuditVerdict(
            NO_GAP_EXPECTED,
            "no undertesting of a marginally distinct high-risk group",
            tuple(conditions),
            undetermined,
        )
    names = ", ".join(f"({n}) {CONDITION_NAMES[n]}" for n in undetermined)
    return AuditVerdict(INCONCLUSIVE, f"undetermined: {names}", tuple(conditions), undetermined)


def audit(
    covariates: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
    scores: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
    tested: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
    alpha: float = 0.01,
    high_risk_group: int | None = None,
    boundaries: LinearBoundaries | None = None,
    tau_grid: npt.ArrayLike | None = None,
    c_grid: npt.ArrayLike | None = None,
) -> AuditVerdict:
    """Walk the four conditions on per-group inputs, (group 0, group 1) in every tuple."""
    conditions = [
        check_marginal_difference(covariates, alpha),
        check_high_risk_undertested(scores, tested, high_risk_group, tau_grid, c_grid),
        *check_boundaries(boundaries),
    ]
    return decide(conditions)


def _binary_column(frame: pl.DataFrame, column: str) -> np.ndarray:
    values = frame[column].cast(pl.Float64, strict=False)
    bad = frame.with_row_index("_row", offset=1).filter(~values.is_in([0.0, 1.0]) | values.is_null())
    if bad.height:
        raise SchemaError(f"column '{column}' must hold 0/1 values", rows=bad["_row"].to_list(), columns=[column])
    return values.cast(pl.Int64).to_numpy()


def audit_frame(
    frame: pl.DataFrame,
    group_column: str = "group",
    tested_column: str = "t",
    score_column: str | None = "score",
    covariate_columns: list[str] | None = None,
    alpha: float = 0.01,
    high_risk_group: int | None = None,
    boundaries: LinearBoundaries | None = None,
) -> AuditVerdict:
    """
    Audit a table with one row per patient.

    Covariates default to the x1..xd columns when present. A score column that is absent
    or entirely empty leaves condition 2 undetermined.
    """
    required = [group_column, tested_column] + list(covariate_columns or [])
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError("audit input is missing required columns", columns=missing)

    groups = _binary_column(frame, group_column)
    masks = (groups == 0, groups == 1)
    if not all(m.any() for m in masks):
        raise SchemaError("audit needs patients from both groups", columns=[group_column])
    tested = _binary_column(frame, tested_column)

    if covariate_columns is None:
        covariate_columns = cohort_covariate_columns(frame.columns)
    covariates = None
    if covariate_columns:
        X = frame.select(covariate_columns).cast(pl.Float64).to_numpy()
        covariates = (X[masks[0]], X[masks[1]])

    scores = None
    if score_column and score_column in frame.columns:
        s = frame[score_column].cast(pl.Float64)
        if not (s.is_null() | s.is_nan()).all():
            s = s.to_numpy()
            scores = (s[masks[0]], s[masks[1]])

    return audit(
        covariates=covariates,
        scores=scores,
        tested=(tested[masks[0]], tested[masks[1]]),
        alpha=alpha,
        high_risk_group=high_risk_group,
        boundaries=boundaries,
    )
