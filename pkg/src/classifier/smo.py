"""
RBF-kernel SVM dual solved by sequential minimal optimization.

Works with signed multipliers beta_i = y_i * alpha_i, so the dual is
    max W(beta) = sum_i y_i beta_i - 1/2 beta' K beta
    s.t. sum_i beta_i = 0,  min(0, C y_i) <= beta_i <= max(0, C y_i)
and g = y - K beta is the gradient of W. Each step picks the maximal violating pair
(i: largest g among coordinates that can grow, j: smallest g among those that can shrink)
and stops once g_i - g_j <= tol.
"""

import functools
from dataclasses import dataclass

import numpy as np
from prefect.logging import get_logger

from src.core.exceptions import ConvergenceError

logger = get_logger(__name__)

# Curvature floor for pairs of identical encoded points
TAU = 1e-12


@dataclass
class SmoSolution:
    beta: np.ndarray
    bias: float
    gradient: np.ndarray
    iterations: int
    max_violation: float
    objective: float


class RbfKernel:
    """K(u, v) = exp(-gamma ||u - v||^2) over the rows of X, with an LRU row cache."""

    def __init__(self, X: np.ndarray, gamma: float, cache_rows: int = 4096):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.gamma = float(gamma)
        self.sq_norms = np.einsum("ij,ij->i", self.X, self.X)
        self.row = functools.lru_cache(maxsize=max(int(cache_rows), 2))(self._row)

    def __len__(self):
        return self.X.shape[0]

    def _row(self, i: int) -> np.ndarray:
        sq = self.sq_norms + self.sq_norms[i] - 2.0 * (self.X @ self.X[i])
        out = np.exp(-self.gamma * np.maximum(sq, 0.0))
        out.setflags(write=False)
        return out


def rbf_cross_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def solve_smo(
    kernel: RbfKernel,
    y: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 1_000_000,
    debug_checks: bool = False,
) -> SmoSolution:
    """
    Solve the dual for labels y in {-1, +1}.

    Ties in pair selection go to the lowest index. With debug_checks the dual objective
    is asserted nondecreasing and the box constraints are asserted at every iterate.
    Raises ConvergenceError if the violation is still above tol after max_iter steps.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    beta = np.zeros(n)
    g = y.copy()
    lo = np.minimum(0.0, C * y)
    hi = np.maximum(0.0, C * y)
    objective = 0.0

    iterations = 0
    violation = np.inf
    while True:
        can_grow = beta < hi
        can_shrink = beta > lo
        if not can_grow.any() or not can_shrink.any():
            violation = 0.0
            break
        i = int(np.argmax(np.where(can_grow, g, -np.inf)))
        j = int(np.argmin(np.where(can_shrink, g, np.inf)))
        violation = g[i] - g[j]
        if violation <= tol:
            break
        if iterations >= max_iter:
            raise ConvergenceError(float(violation), iterations, tol)

        k_i = kernel.row(i)
        k_j = kernel.row(j)
        curvature = k_i[i] + k_j[j] - 2.0 * k_i[j]
        step = min(hi[i] - beta[i], beta[j] - lo[j], violation / max(curvature, TAU))
        beta[i] += step
        beta[j] -= step
        g -= step * (k_i - k_j)
        iterations += 1

        if debug_checks:
            gain = step * violation - 0.5 * step * step * curvature
            assert gain >= -1e-12, f"dual objective decreased by {-gain:.3e} at iteration {iterations}"
            objective += gain
            assert np.all(beta >= lo - 1e-12) and np.all(beta <= hi + 1e-12), (
                f"box constraint violated at iteration {iterations}"
            )

    free = (beta > lo) & (beta < hi)
    if free.any():
        bias = float(np.mean(g[free]))
    else:
        up = np.where(beta < hi, g, -np.inf).max()
        down = np.where(beta > lo, g, np.inf).min()
        bias = float((up + down) / 2.0) if np.isfinite(up) and np.isfinite(down) else 0.0

    logger.debug(
        "SMO converged in %d iterations (violation %.2e, %d support vectors)",
        iterations,
        violation,
        int(np.count_nonzero(beta)),
    )
    return SmoSolution(
        beta=beta,
        bias=bias,
        gradient=g,
        iterations=iterations,
        max_violation=float(violation),
        objective=objective if debug_checks else float(beta @ y - 0.5 * beta @ (y - g)),
    )
