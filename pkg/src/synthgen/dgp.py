from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from src.core.exceptions import UndefinedMetricError
from src.core.rng import Rng
from src.core.types import Cohort, GroupId, SimulationConfig

# Bins per unit of covariate in the staircase scorer: s(x) = (1/5) * sum(ceil(5 x_i))
STAIRCASE_STEPS = 5
# Relative downward nudge before ceil, so 5 * 0.6 = 3.0000000000000004 lands in bin 3
CEIL_REL_EPS = 1e-12

# Per-setting group means; everything else shares sigma2=0.1, c=0.05, b=5, d=10
SETTING_MEANS = {
    1: (0.45, 0.45),
    2: (0.35, 0.55),
    3: (0.45, 0.45),
}


@dataclass(frozen=True)
class RotationSpec:
    """Rotation by R(-phi) of consecutive coordinate pairs (1,2),(3,4),... of the first d_rot dims about center."""

    phi: float
    d_rot: int
    center: float | npt.NDArray = 0.4

    def __post_init__(self):
        if self.d_rot < 0 or self.d_rot % 2:
            raise ValueError(f"d_rot must be a non-negative even count, got {self.d_rot}")

    @classmethod
    def from_config(cls, config: SimulationConfig) -> "RotationSpec":
        return cls(phi=config.phi, d_rot=config.d_rot)


def setting_config(setting: int, **overrides) -> SimulationConfig:
    """
    Preset SimulationConfig for one of the three simulation settings.

    Setting 1: no group difference. Setting 2: marginal covariate shift (mu 0.35/0.55).
    Setting 3: conditional shift, realized by rotating group 1's scoring geometry
    (pass phi and d_rot).
    """
    if setting not in SETTING_MEANS:
        raise ValueError(f"setting must be one of {sorted(SETTING_MEANS)}, got {setting}")
    mu0, mu1 = SETTING_MEANS[setting]
    values = dict(mu0=mu0, mu1=mu1, sigma2=0.1, c=0.05, b=5.0, d=10)
    if setting == 3:
        values.update(d_rot=4)
    values.update(overrides)
    return SimulationConfig(**values)


def staircase_bins(x: npt.ArrayLike) -> np.ndarray:
    """Integer bin index ceil(5 x) per component, with the downward nudge at bin edges."""
    scaled = STAIRCASE_STEPS * np.asarray(x, dtype=np.float64)
    return np.ceil(scaled - np.abs(scaled) * CEIL_REL_EPS).astype(np.int64)


def staircase_score(x: npt.ArrayLike):
    """
    Ground-truth risk s(x) = (1/5) * sum_i ceil(5 x_i).

    Accepts one vector (returns a float) or an (n, d) matrix (returns a vector).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("staircase_score needs at least one covariate dimension")
    score = staircase_bins(x).sum(axis=-1) / STAIRCASE_STEPS
    return float(score) if np.ndim(score) == 0 else score


def rotate(x: npt.ArrayLike, spec: RotationSpec) -> np.ndarray:
    """
    Apply R(-phi) about spec.center to each consecutive pair of the first d_rot dims.

    Works on one vector or an (n, d) matrix; remaining dimensions pass through unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    if spec.d_rot % 2:
        raise ValueError(f"d_rot must be even, got {spec.d_rot}")
    d = x.shape[-1]
    if d < spec.d_rot:
        raise ValueError(f"cannot rotate {spec.d_rot} dimensions of a {d}-dimensional vector")
    out = np.array(x, dtype=np.float64, copy=True)
    if spec.d_rot == 0:
        return out

    center = np.broadcast_to(np.asarray(spec.center, dtype=np.float64), (d,))
    theta = np.deg2rad(spec.phi)
    cos, sin = np.cos(theta), np.sin(theta)
    u = x[..., 0 : spec.d_rot : 2] - center[0 : spec.d_rot : 2]
    v = x[..., 1 : spec.d_rot : 2] - center[1 : spec.d_rot : 2]
    # R(-phi) = [[cos, sin], [-sin, cos]]
    out[..., 0 : spec.d_rot : 2] = cos * u + sin * v + center[0 : spec.d_rot : 2]
    out[..., 1 : spec.d_rot : 2] = -sin * u + cos * v + center[1 : spec.d_rot : 2]
    return out


def group_sizes(n: int) -> tuple[int, int]:
    """Equal halves; an odd patient goes to group 0."""
    return (n + 1) // 2, n // 2


def sample_covariates(
    rng: Rng, group: GroupId, config: SimulationConfig, n: int | None = None
) -> np.ndarray:
    """
    Draw covariates x ~ clip(N(mu_a * 1, sigma2 * I), 0, 1).

    Returns one length-d vector, or an (n, d) matrix when n is given.
    """
    mu = config.mu0 if int(group) == 0 else config.mu1
    shape = (config.d,) if n is None else (n, config.d)
    return np.clip(mu + np.sqrt(config.sigma2) * rng.normal(shape), 0.0, 1.0)


def group_scores(x: np.ndarray, group: np.ndarray, config: SimulationConfig) -> np.ndarray:
    """Staircase risk per patient; group 1 is scored on rotated covariates when phi != 0."""
    score = staircase_score(x)
    if config.rotated:
        g1 = group == 1
        if g1.any():
            score[g1] = staircase_score(rotate(x[g1], RotationSpec.from_config(config)))
    return score


def generate_cohort(config: SimulationConfig, n: int, rng: Rng) -> Cohort:
    """
    Simulate n patients under disparate censorship.

    Draw order is fixed (all standard normals, then all test uniforms), so two configs
    that differ only in thresholds or rotation share covariate noise for the same Rng.
    y = 1[s > b] on the group risk s; t = 1[s_test > tau_a] or, below tau_a, Bernoulli(c);
    observed y_obs = y * t. Testing always follows the unrotated staircase score s_test, so in
    Setting 3 rotation moves the decision boundary of group 1 but not its censorship boundary.
    """
    if n < 2:
        raise ValueError(f"cohort size must be >= 2, got {n}")
    n0, n1 = group_sizes(n)
    group = np.concatenate([np.zeros(n0, dtype=np.int8), np.ones(n1, dtype=np.int8)])

    noise = rng.normal((n, config.d))
    test_draws = rng.uniform(n)

    mu = np.where(group == 0, config.mu0, config.mu1)[:, None]
    x = np.clip(mu + np.sqrt(config.sigma2) * noise, 0.0, 1.0)
    score = group_scores(x, group, config)
    test_score = staircase_score(x) if config.rotated else score

    y = (score > config.b).astype(np.int8)
    tau = np.where(group == 0, config.tau0, config.tau1)
    t = ((test_score > tau) | (test_draws < config.c)).astype(np.int8)
    return Cohort(
        group=group,
        x=x,
        y=y,
        t=t,
        y_obs=y * t,
        score=score,
        metadata={"rng_seed": rng.seed, "rng_stream": rng.stream_id},
    )


def missed_positive_rate(cohort: Cohort, group: GroupId | int | None = None) -> float:
    """
    Fraction of true positives (y=1) never observed (y_obs=0).

    group=None pools both groups.
    """
    positives = (cohort.y == 1) & cohort.mask(group)
    if not positives.any():
        label = "all groups" if group is None else f"group {int(group)}"
        raise UndefinedMetricError(f"missed-positive rate undefined: no true positives in {label}")
    return float(np.mean(cohort.y_obs[positives] == 0))


def testing_rate(cohort: Cohort, group: GroupId | int | None = None) -> float:
    """P_a(t=1)."""
    selected = cohort.mask(group)
    if not selected.any():
        raise UndefinedMetricError(f"no patients in group {group}")
    return float(np.mean(cohort.t[selected]))


def censorship_rate(cohort: Cohort, group: GroupId | int | None = None) -> float:
    """P_a(t=0)."""
    return 1.0 - testing_rate(cohort, group)
