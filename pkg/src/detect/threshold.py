"""
Grid maximum-likelihood fit of the threshold testing law

    P(t=1 | s) = 1       if s > tau
                 c       otherwise

to observed (score, tested) pairs. Any untested patient above tau makes the likelihood
zero, so the fit is pushed to the smallest tau that covers every untested score.
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import numpy.typing as npt
from prefect.logging import get_logger
from scipy import stats
from scipy.special import xlogy

logger = get_logger(__name__)

DEFAULT_C_GRID = np.linspace(0.005, 1.0, 200)


@dataclass(frozen=True)
class ThresholdEstimate:
    tau_hat: float
    c_hat: float
    log_likelihood: float
    boundary: bool
    constant_log_likelihood: float
    lr_statistic: float
    lr_p_value: float
    poor_fit: bool

    def to_dict(self) -> dict:
        return asdict(self)


def default_tau_grid(scores: npt.ArrayLike) -> np.ndarray:
    """Every distinct observed score plus one point below the minimum."""
    levels = np.unique(np.asarray(scores, dtype=np.float64))
    if levels.size == 0:
        raise ValueError("cannot build a threshold grid from zero scores")
    return np.concatenate([[levels[0] - 1.0], levels])


def _grid(values, name: str) -> np.ndarray:
    grid = np.unique(np.asarray(values, dtype=np.float64).ravel())
    if grid.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if np.isnan(grid).any():
        raise ValueError(f"{name} contains NaN")
    return grid


def constant_rate_log_likelihood(tested: npt.ArrayLike) -> float:
    """Log-likelihood of P(t=1) = k/n, the no-threshold alternative."""
    tested = np.asarray(tested)
    n, k = tested.size, int(tested.sum())
    p = k / n
    return float(xlogy(k, p) + xlogy(n - k, 1.0 - p))


def log_likelihood_surface(scores, tested, c_grid, tau_grid) -> np.ndarray:
    """
    Log-likelihood for every (tau, c) pair; rows follow tau_grid, columns c_grid.

    Patients at or below tau contribute k log c + (m - k) log(1 - c); patients above
    tau contribute 0 if all tested, else the cell is -inf.
    """
    order = np.argsort(scores, kind="stable")
    s_sorted = scores[order]
    tested_cum = np.concatenate([[0], np.cumsum(tested[order])])
    m = np.searchsorted(s_sorted, tau_grid, side="right")
    k = tested_cum[m]
    untested_total = scores.size - int(tested.sum())
    untested_above = untested_total - (m - k)

    with np.errstate(divide="ignore"):
        surface = xlogy(k[:, None], c_grid[None, :]) + xlogy((m - k)[:, None], 1.0 - c_grid[None, :])
    surface[untested_above > 0, :] = -np.inf
    return surface


def estimate_threshold(
    scores: npt.ArrayLike,
    tested: npt.ArrayLike,
    c_grid: npt.ArrayLike | None = None,
    tau_grid: npt.ArrayLike | None = None,
    alpha: float = 0.01,
) -> ThresholdEstimate:
    """
    Maximum-likelihood (tau, c) over the grids, ties broken toward smaller tau, then smaller c.

    Also reports the likelihood-ratio test against the constant-rate model (chi-square,
    1 degree of freedom); poor_fit is set when the step model does not beat it at alpha.
    An estimate on the edge of either grid sets `boundary` and warns.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    tested = np.asarray(tested).ravel()
    if scores.shape != tested.shape:
        raise ValueError(f"scores ({scores.size}) and tested ({tested.size}) are misaligned")
    if scores.size == 0:
        raise ValueError("estimate_threshold needs at least one patient")
    if not np.isin(tested, (0, 1)).all():
        raise ValueError("tested flags must be 0 or 1")
    tested = tested.astype(np.int64)

    c_grid = _grid(DEFAULT_C_GRID if c_grid is None else c_grid, "c_grid")
    if c_grid[0] < 0.0 or c_grid[-1] > 1.0:
        raise ValueError("c_grid values must lie in [0, 1]")
    tau_grid = _grid(default_tau_grid(scores) if tau_grid is None else tau_grid, "tau_grid")

    surface = log_likelihood_surface(scores, tested, c_grid, tau_grid)
    # Row-major argmax: first maximum is the smallest tau, then the smallest c
    i, j = np.unravel_index(np.argmax(surface), surface.shape)
    best = float(surface[i, j])

    on_tau_edge = tau_grid.size > 1 and i in (0, tau_grid.size - 1)
    on_c_edge = c_grid.size > 1 and j in (0, c_grid.size - 1)
    boundary = bool(on_tau_edge or on_c_edge)
    if boundary:
        warnings.warn(
            f"threshold estimate on the grid boundary (tau_hat={tau_grid[i]:.4g}, c_hat={c_grid[j]:.4g})",
            UserWarning,
        )

    constant = constant_rate_log_likelihood(tested)
    if np.isfinite(best):
        lr = max(0.0, 2.0 * (best - constant))
        lr_p = float(stats.chi2.sf(lr, df=1))
    else:
        lr, lr_p = 0.0, 1.0
    poor_fit = bool(not np.isfinite(best) or lr_p >= alpha)
    logger.debug(
        "threshold fit: tau_hat=%.4g c_hat=%.4g loglik=%.4f lr=%.3f p=%.3g",
        tau_grid[i],
        c_grid[j],
        best,
        lr,
        lr_p,
    )
    return ThresholdEstimate(
        tau_hat=float(tau_grid[i]),
        c_hat=float(c_grid[j]),
        log_likelihood=best,
        boundary=boundary,
        constant_log_likelihood=constant,
        lr_statistic=float(lr),
        lr_p_value=lr_p,
        poor_fit=poor_fit,
    )
