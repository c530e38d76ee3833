from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.integrate import trapezoid


@dataclass(frozen=True)
class RiskProfile:
    """Per-group testing probabilities P_a(t=1 | r) on a shared, sorted risk grid."""

    r: np.ndarray
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        r, p0, p1 = (np.asarray(v, dtype=np.float64) for v in (self.r, self.p0, self.p1))
        if not (r.shape == p0.shape == p1.shape) or r.ndim != 1:
            raise ValueError(
                f"risk grid and testing curves are misaligned: r{r.shape}, p0{p0.shape}, p1{p1.shape}"
            )
        if np.any(np.diff(r) < 0):
            raise ValueError("risk grid must be sorted ascending")
        for name, p in (("p0", p0), ("p1", p1)):
            if np.any((p < 0) | (p > 1)):
                raise ValueError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)


def undertesting_level(profile: RiskProfile) -> float:
    """
    Integral over r of max(0, P0(t|r) - P1(t|r)), trapezoidal on the profile grid.

    Measures undertesting of group 1 relative to group 0; swap the curves for the
    opposite direction.
    """
    if profile.r.size < 2:
        raise ValueError("undertesting_level needs a grid with at least 2 points")
    return float(trapezoid(np.maximum(0.0, profile.p0 - profile.p1), profile.r))


def threshold_undertesting(tau0: float, tau1: float, c: float) -> float:
    """Closed form (1 - c)(tau1 - tau0) for threshold testing, clipped at 0."""
    if not 0.0 < c <= 1.0:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    return max(0.0, (1.0 - c) * (tau1 - tau0))


def threshold_testing_profile(
    grid: npt.ArrayLike, tau0: float, tau1: float, c: float
) -> RiskProfile:
    """Testing law P_a(t=1 | r) = 1 if r > tau_a else c, evaluated on grid."""
    r = np.asarray(grid, dtype=np.float64)
    return RiskProfile(
        r=r,
        p0=np.where(r > tau0, 1.0, c),
        p1=np.where(r > tau1, 1.0, c),
    )


def empirical_risk_profile(
    scores: npt.ArrayLike, tested: npt.ArrayLike, groups: npt.ArrayLike
) -> RiskProfile:
    """
    Empirical P_a(t=1 | r) at each observed risk level present in both groups.

    Levels seen in only one group are dropped so both curves share the grid.
    """
    scores = np.asarray(scores, dtype=np.float64)
    tested = np.asarray(tested, dtype=np.float64)
    groups = np.asarray(groups)
    levels = np.unique(scores)
    curves = []
    for a in (0, 1):
        in_group = groups == a
        index = np.searchsorted(levels, scores[in_group])
        counts = np.bincount(index, minlength=levels.size)
        hits = np.bincount(index, weights=tested[in_group], minlength=levels.size)
        curves.append((counts, hits))
    shared = (curves[0][0] > 0) & (curves[1][0] > 0)
    return RiskProfile(
        r=levels[shared],
        p0=curves[0][1][shared] / curves[0][0][shared],
        p1=curves[1][1][shared] / curves[1][0][shared],
    )


def marginal_kl(mu0: npt.ArrayLike, mu1: npt.ArrayLike, sigma2: float) -> float:
    """KL between N(mu0, sigma2 I) and N(mu1, sigma2 I): ||mu1 - mu0||^2 / (2 sigma2)."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=np.float64))
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    if mu0.shape != mu1.shape:
        raise ValueError(f"mean vectors differ in dimension: {mu0.shape} vs {mu1.shape}")
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    delta = mu1 - mu0
    return float(delta @ delta / (2.0 * sigma2))
