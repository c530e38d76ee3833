import math
from dataclasses import asdict, dataclass

import numpy as np
import numpy.typing as npt
from scipy import stats

from src.core.exceptions import UndefinedMetricError


@dataclass(frozen=True)
class ZTestResult:
    test: str
    p0: float
    p1: float
    n0: int
    n1: int
    z: float
    p_value: float
    alpha: float
    significant: bool

    def to_row(self) -> dict:
        """Row in the published table layout (test, p0, p1, z, p) plus counts and decision."""
        row = asdict(self)
        row["p"] = row.pop("p_value")
        return {key: row[key] for key in ("test", "p0", "p1", "z", "p", "n0", "n1", "alpha", "significant")}


def _zstat_generic(value0: float, value1: float, std_diff: float) -> tuple[float, float]:
    """Two-sided normal test of value0 - value1 = 0."""
    if std_diff == 0.0:
        if value0 == value1:
            return 0.0, 1.0
        return math.copysign(math.inf, value0 - value1), 0.0
    z = (value0 - value1) / std_diff
    return float(z), float(2.0 * stats.norm.sf(abs(z)))


def two_proportion_ztest(
    p0: float, n0: int, p1: float, n1: int, alpha: float = 0.01, test: str = ""
) -> ZTestResult:
    """
    Two-sided z-test for equal proportions with the unpooled standard error
    sqrt(p0 (1 - p0) / n0 + p1 (1 - p1) / n1).

    Equal degenerate proportions (both 0 or both 1) give z = 0, p = 1.
    """
    if n0 < 1 or n1 < 1:
        raise ValueError(f"group sizes must be >= 1, got n0={n0}, n1={n1}")
    for name, p in (("p0", p0), ("p1", p1)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")
    std_diff = math.sqrt(p0 * (1.0 - p0) / n0 + p1 * (1.0 - p1) / n1)
    z, p_value = _zstat_generic(p0, p1, std_diff)
    return ZTestResult(
        test=test,
        p0=float(p0),
        p1=float(p1),
        n0=int(n0),
        n1=int(n1),
        z=z,
        p_value=p_value,
        alpha=float(alpha),
        significant=bool(p_value < alpha),
    )


def bonferroni(alpha: float, m: int) -> float:
    if m < 1:
        raise ValueError(f"Bonferroni correction needs m >= 1 tests, got {m}")
    return alpha / m


def ks_two_sample(sample0: npt.ArrayLike, sample1: npt.ArrayLike) -> tuple[float, float]:
    """
    Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.

    p = P(K > sqrt(en) D) under the Kolmogorov distribution, en = n0 n1 / (n0 + n1).
    """
    sample0 = np.asarray(sample0, dtype=np.float64).ravel()
    sample1 = np.asarray(sample1, dtype=np.float64).ravel()
    if sample0.size == 0 or sample1.size == 0:
        raise UndefinedMetricError(
            f"KS test needs two nonempty samples, got sizes {sample0.size} and {sample1.size}"
        )
    statistic = float(stats.ks_2samp(sample0, sample1).statistic)
    en = sample0.size * sample1.size / (sample0.size + sample1.size)
    return statistic, float(stats.kstwobign.sf(math.sqrt(en) * statistic))
