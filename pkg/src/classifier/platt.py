import numpy as np
from scipy.optimize import minimize
from scipy.special import expit


def platt_targets(labels: np.ndarray) -> np.ndarray:
    """Smoothed targets (N+ + 1)/(N+ + 2) for positives and 1/(N- + 2) for negatives."""
    labels = np.asarray(labels)
    n_pos = float(np.sum(labels > 0))
    n_neg = labels.size - n_pos
    return np.where(labels > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))


def platt_objective(params: np.ndarray, f: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Negative log-likelihood of P = 1 / (1 + exp(A f + B)) against smoothed targets, and its gradient.

    Written with logaddexp so large |A f + B| does not overflow.
    """
    A, B = params
    z = A * f + B
    loss = np.sum(targets * np.logaddexp(0.0, z) + (1.0 - targets) * np.logaddexp(0.0, -z))
    residual = targets - expit(-z)
    return float(loss), np.array([residual @ f, residual.sum()])


def fit_platt(decision_values: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Fit sigmoid parameters (A, B) by BFGS from Platt's starting point."""
    f = np.asarray(decision_values, dtype=np.float64)
    labels = np.asarray(labels)
    targets = platt_targets(labels)
    n_pos = float(np.sum(labels > 0))
    n_neg = labels.size - n_pos
    start = np.array([0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))])
    result = minimize(platt_objective, start, args=(f, targets), jac=True, method="BFGS")
    A, B = result.x
    return float(A), float(B)


def platt_probability(decision_values, A: float, B: float):
    return expit(-(A * np.asarray(decision_values, dtype=np.float64) + B))
