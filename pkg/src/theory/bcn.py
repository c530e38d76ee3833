"""
Boundary-consistent noise (BCN) checks on a caller-supplied grid.

A noise model (f0, f1, s, eta) is admissible when
  (i)   s is order-preserving for eta,
  (ii)  f0 and f1 are nondecreasing where eta <= 1/2 and nonincreasing where eta > 1/2,
  (iii) f1 - f0 is nonincreasing in z = s(x),
  (iv)  f0 + f1 < 1.
Under admissibility, optimizing AUC on the noisy labels stays consistent.
"""

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
import numpy.typing as npt
from scipy.special import expit

FEASIBLE_RANKING = "feasible-ranking"
PIECEWISE_MONOTONICITY = "piecewise-monotonicity"
FLIP_MONOTONICITY = "flip-probability-monotonicity"
NOISE_BOUND = "noise-bound"


@dataclass(frozen=True)
class GaussianMarginals:
    """Group score distributions z | a ~ N(mu_a, sigma2); p_a = P(A=0); c = floor testing rate."""

    mu0: float
    mu1: float
    sigma2: float
    p_a: float
    c: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if not 0.0 < self.p_a < 1.0:
            raise ValueError(f"p_a must lie in (0, 1), got {self.p_a}")
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"c must lie in (0, 1], got {self.c}")

    @property
    def midpoint(self) -> float:
        return (self.mu0 + self.mu1) / 2.0


@dataclass(frozen=True)
class NoiseModel:
    """f0, f1 map scores z to flip probabilities; scorer maps grid points x to z; eta maps x to P(Y=1|x)."""

    f0: Callable[[np.ndarray], np.ndarray]
    f1: Callable[[np.ndarray], np.ndarray]
    scorer: Callable[[np.ndarray], np.ndarray]
    eta: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BcnVerdict:
    admissible: bool
    condition: str | None = None
    location: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = "admissible" if self.admissible else "violated"
        return out


def log_odds(z: npt.ArrayLike, g: GaussianMarginals) -> np.ndarray:
    """g(z) = log(p_a / ((1 - p_a)(1 - c))) + (2z - mu0 - mu1)(mu0 - mu1) / (2 sigma2)."""
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(divide="ignore"):
        base = math.log(g.p_a) - math.log(1.0 - g.p_a) - np.log(1.0 - g.c)
    return base + (2.0 * z - g.mu0 - g.mu1) * (g.mu0 - g.mu1) / (2.0 * g.sigma2)


def flip_probability(z: npt.ArrayLike, g: GaussianMarginals, tau0: float, tau1: float):
    """
    Probability that a positive at score z goes unobserved, for tau1 <= tau0.

    1 - c below tau1 (both groups at the testing floor), sigma(g(z)) on [tau1, tau0)
    (only group 1 censored), 0 at and above tau0.
    """
    if tau1 > tau0:
        raise ValueError(f"flip_probability requires tau1 <= tau0, got tau1={tau1}, tau0={tau0}")
    z_arr = np.asarray(z, dtype=np.float64)
    middle = expit(log_odds(z_arr, g))
    out = np.where(z_arr < tau1, 1.0 - g.c, np.where(z_arr < tau0, middle, 0.0))
    return float(out) if out.ndim == 0 else out


def tau1_bound(g: GaussianMarginals, double_offset: bool = False) -> float:
    """
    Value of tau1 at which f1 lands exactly on 1 - c just past the tau1 jump.

    Solves sigma(g(tau1)) = 1 - c:
        log((1-c)^2 (1-p_a) / (c p_a)) * sigma2 / (mu0 - mu1) + (mu0 + mu1) / 2.
    With mu1 > mu0 the middle branch decreases, so f1 is nonincreasing across the jump
    exactly when tau1 >= bound. double_offset=True uses 2 sigma2 / (mu0 - mu1) in place of
    sigma2 / (mu0 - mu1), the commonly quoted closed form; it does not satisfy the binding
    equality. Returns +/-inf when c = 1 (the log term diverges).
    """
    if g.mu0 == g.mu1:
        raise ValueError("tau1_bound is undefined for mu0 == mu1")
    numerator = (1.0 - g.c) ** 2 * (1.0 - g.p_a)
    if numerator == 0.0:
        # log(0) times a factor whose sign is that of mu0 - mu1
        return math.inf if g.mu1 > g.mu0 else -math.inf
    factor = (2.0 if double_offset else 1.0) * g.sigma2 / (g.mu0 - g.mu1)
    return math.log(numerator / (g.c * g.p_a)) * factor + g.midpoint


def marginal_shift_noise_model(g: GaussianMarginals, tau0: float, tau1: float, b: float) -> NoiseModel:
    """
    Noise model of the marginal-shift construction on the score axis.

    Grid points are scores (identity scorer), eta(z) = 1[z > b], f0 = 0, f1 = flip_probability.
    The construction assumes the decision threshold b lies below tau1.
    """
    if not b < tau1:
        raise ValueError(f"construction requires b < tau1, got b={b}, tau1={tau1}")
    if tau1 > tau0:
        raise ValueError(f"construction requires tau1 <= tau0, got tau1={tau1}, tau0={tau0}")

    def f1(z):
        return np.asarray(flip_probability(z, g, tau0, tau1), dtype=np.float64)

    return NoiseModel(
        f0=lambda z: np.zeros_like(np.asarray(z, dtype=np.float64)),
        f1=f1,
        scorer=lambda x: np.asarray(x, dtype=np.float64),
        eta=lambda x: (np.asarray(x, dtype=np.float64) > b).astype(np.float64),
    )


def _first_feasible_ranking_violation(x, z, eta) -> float | None:
    order = np.argsort(eta, kind="stable")
    eta_sorted, z_sorted, x_sorted = eta[order], z[order], x[order]
    _, starts = np.unique(eta_sorted, return_index=True)
    if starts.size < 2:
        return None
    level_min = np.minimum.reduceat(z_sorted, starts)
    level_max = np.maximum.reduceat(z_sorted, starts)
    max_below = np.maximum.accumulate(level_max)[:-1]
    bad = np.flatnonzero(level_min[1:] <= max_below)
    if not bad.size:
        return None
    k = bad[0] + 1
    stop = starts[k + 1] if k + 1 < starts.size else z_sorted.size
    offending = starts[k] + np.argmin(z_sorted[starts[k] : stop])
    return float(x_sorted[offending])


def check_bcn_admissible(model: NoiseModel, grid: npt.ArrayLike, tol: float = 1e-12) -> BcnVerdict:
    """
    Check BCN conditions (i)-(iv) on grid and report the first violated one.

    Monotonicity is checked between neighbours in score order; pairs that straddle the
    eta = 1/2 boundary are skipped for (ii). location is the grid point where the
    violation shows.
    """
    x = np.sort(np.asarray(grid, dtype=np.float64))
    if x.size == 0:
        raise ValueError("check_bcn_admissible needs a nonempty grid")
    z = np.asarray(model.scorer(x), dtype=np.float64)
    eta = np.asarray(model.eta(x), dtype=np.float64)
    f0 = np.asarray(model.f0(z), dtype=np.float64)
    f1 = np.asarray(model.f1(z), dtype=np.float64)

    location = _first_feasible_ranking_violation(x, z, eta)
    if location is not None:
        return BcnVerdict(False, FEASIBLE_RANKING, location)

    order = np.argsort(z, kind="stable")
    xs, zs, high = x[order], z[order], eta[order] > 0.5
    step = np.diff(zs) > 0
    same_region = high[1:] == high[:-1]
    for f in (f0[order], f1[order]):
        df = np.diff(f)
        violates = step & same_region & np.where(high[1:], df > tol, df < -tol)
        if violates.any():
            return BcnVerdict(False, PIECEWISE_MONOTONICITY, float(xs[np.argmax(violates) + 1]))

    rising = step & (np.diff(f1[order] - f0[order]) > tol)
    if rising.any():
        return BcnVerdict(False, FLIP_MONOTONICITY, float(xs[np.argmax(rising) + 1]))

    too_noisy = f0 + f1 >= 1.0
    if too_noisy.any():
        return BcnVerdict(False, NOISE_BOUND, float(x[np.argmax(too_noisy)]))

    return BcnVerdict(True)
