from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class LinearBoundaries:
    """
    Linear censorship boundary t = 1[theta.x + beta > 0] and per-group decision
    boundaries y = 1[theta_a.x + b_a > 0].
    """

    theta: np.ndarray
    beta: float
    theta_a: tuple[np.ndarray, np.ndarray]
    b_a: tuple[float, float]

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if not np.any(theta):
            raise ValueError("censorship direction theta must be nonzero")
        per_group = tuple(np.asarray(v, dtype=np.float64) for v in self.theta_a)
        if len(per_group) != 2 or len(self.b_a) != 2:
            raise ValueError("need exactly two per-group decision boundaries")
        for a, v in enumerate(per_group):
            if v.shape != theta.shape:
                raise ValueError(f"theta_a[{a}] has shape {v.shape}, expected {theta.shape}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta_a", per_group)
        object.__setattr__(self, "b_a", tuple(float(b) for b in self.b_a))

    @classmethod
    def from_dict(cls, values: dict) -> "LinearBoundaries":
        return cls(
            theta=np.asarray(values["theta"]),
            beta=float(values["beta"]),
            theta_a=tuple(np.asarray(v) for v in values["theta_a"]),
            b_a=tuple(values["b_a"]),
        )


@dataclass(frozen=True)
class ParallelVerdict:
    parallel: bool
    deltas: dict = field(default_factory=dict)
    group: int | None = None
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = "parallel" if self.parallel else "not_parallel"
        return out


def check_parallel_boundaries(lb: LinearBoundaries, tol: float = 1e-9) -> ParallelVerdict:
    """
    Test theta_a = delta_a * theta with delta_a > 0 for each group.

    Collinearity is judged by the relative residual ||theta_a - (theta_a . u) u|| / ||theta_a||
    with u = theta / ||theta||; delta_a = (theta_a . u) / ||theta||.
    """
    norm = np.linalg.norm(lb.theta)
    unit = lb.theta / norm
    deltas, residuals = {}, {}
    for a, theta_a in enumerate(lb.theta_a):
        size = np.linalg.norm(theta_a)
        if size == 0.0:
            return ParallelVerdict(False, deltas, a, residuals)
        projection = float(theta_a @ unit)
        residual = float(np.linalg.norm(theta_a - projection * unit) / size)
        residuals[a] = residual
        if residual > tol or projection <= 0.0:
            return ParallelVerdict(False, deltas, a, residuals)
        deltas[a] = projection / norm
    return ParallelVerdict(True, deltas, None, residuals)


def decision_boundaries_differ(lb: LinearBoundaries, tol: float = 1e-9) -> bool:
    """True when (theta_0, b_0) and (theta_1, b_1) are not positive multiples of each other."""
    v0 = np.append(lb.theta_a[0], lb.b_a[0])
    v1 = np.append(lb.theta_a[1], lb.b_a[1])
    n0, n1 = np.linalg.norm(v0), np.linalg.norm(v1)
    if n0 == 0.0 or n1 == 0.0:
        return bool(n0 != n1)
    return bool(np.linalg.norm(v0 / n0 - v1 / n1) > tol)
