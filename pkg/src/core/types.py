import dataclasses
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
import polars as pl
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from src.core.exceptions import ConfigError


class GroupId(IntEnum):
    """Binary patient subgroup label a."""

    GROUP_0 = 0
    GROUP_1 = 1


GROUPS = (GroupId.GROUP_0, GroupId.GROUP_1)


@dataclass(frozen=True)
class Patient:
    group: GroupId
    covariates: np.ndarray
    y: int
    t: int
    y_obs: int
    score: float | None = None

    def __post_init__(self):
        if self.y_obs != self.y * self.t:
            raise ValueError(
                f"observed label must equal y*t, got y={self.y}, t={self.t}, y_obs={self.y_obs}"
            )


@dataclass(frozen=True)
class SimulationConfig:
    """
    Full parameterization of the censored data-generating process.

    mu0, mu1 are per-dimension covariate means (x ~ clip(N(mu_a * 1, sigma2 * I), 0, 1)).
    tau0, tau1 are the censorship thresholds on the staircase risk score; below tau_a a
    patient is tested with probability c. phi/d_rot rotate group 1's scoring geometry.
    """

    mu0: float = 0.45
    mu1: float = 0.45
    sigma2: float = 0.1
    tau0: float = 5.0
    tau1: float = 5.0
    c: float = 0.05
    b: float = 5.0
    phi: float = 0.0
    d_rot: int = 0
    d: int = 10
    n_train: int = 2000
    n_test: int = 20000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ConfigError(f"c must lie in (0, 1], got {self.c}", key="c")
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be > 0, got {self.sigma2}", key="sigma2")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}", key="d")
        if self.d_rot < 0 or self.d_rot % 2 or self.d_rot > self.d:
            raise ConfigError(
                f"d_rot must be an even count in [0, d={self.d}], got {self.d_rot}",
                key="d_rot",
            )
        if not 0.0 <= self.phi < 360.0:
            raise ConfigError(f"phi must lie in [0, 360), got {self.phi}", key="phi")
        for name in ("n_train", "n_test"):
            if getattr(self, name) < 2:
                raise ConfigError(
                    f"{name} must be >= 2, got {getattr(self, name)}", key=name
                )
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}", key="seed")
        for name in ("mu0", "mu1", "tau0", "tau1", "b"):
            if math.isnan(getattr(self, name)):
                raise ConfigError(f"{name} must not be NaN", key=name)

    @property
    def rotated(self) -> bool:
        return self.phi != 0.0 and self.d_rot > 0

    def replace(self, **changes) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, values: dict) -> "SimulationConfig":
        return load_structured(cls, values)

    @classmethod
    def from_json(cls, source: str | Path) -> "SimulationConfig":
        """Parse a JSON document or a path to one."""
        text = Path(source).read_text() if _is_path(source) else str(source)
        try:
            values = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from e
        return cls.from_dict(values)


def _is_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return not str(source).lstrip().startswith("{")


def load_structured(schema: type, values: dict):
    """
    Merge `values` onto the dataclass `schema` through OmegaConf and instantiate it.

    Unknown keys and type mismatches raise ConfigError carrying the offending key path.
    """
    if not isinstance(values, dict):
        raise ConfigError(f"expected a JSON object, got {type(values).__name__}")
    try:
        merged = OmegaConf.merge(OmegaConf.structured(schema), values)
        return OmegaConf.to_object(merged)
    except OmegaConfBaseException as e:
        key = getattr(e, "full_key", None) or None
        raise ConfigError(getattr(e, "msg", None) or str(e), key=key) from e


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Cohort:
    """
    Column-oriented cohort: one entry per patient in every array.

    score holds the risk score; simulated cohorts carry the ground-truth staircase score,
    `with_scores` swaps in model scores for evaluation.
    """

    group: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    y_obs: np.ndarray
    score: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.group)
        object.__setattr__(self, "group", _frozen(self.group, np.int8))
        object.__setattr__(self, "x", _frozen(np.atleast_2d(self.x), np.float64))
        for name in ("y", "t", "y_obs"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int8))
        if self.score is not None:
            object.__setattr__(self, "score", _frozen(self.score, np.float64))

        if self.x.ndim != 2 or self.x.shape[0] != n or self.x.shape[1] < 1:
            raise ValueError(f"covariates must have shape ({n}, d>=1), got {self.x.shape}")
        for name in ("y", "t", "y_obs") + (("score",) if self.score is not None else ()):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if not np.isin(self.group, (0, 1)).all():
            raise ValueError("group labels must be 0 or 1")
        for name in ("y", "t"):
            if not np.isin(getattr(self, name), (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        if not np.array_equal(self.y_obs, self.y * self.t):
            bad = np.flatnonzero(self.y_obs != self.y * self.t)
            raise ValueError(f"observed label must equal y*t; violated at rows {bad[:10].tolist()}")
        if n and (self.x.min() < 0.0 or self.x.max() > 1.0):
            raise ValueError("covariates must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.group)

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def patient(self, i: int) -> Patient:
        return Patient(
            group=GroupId(int(self.group[i])),
            covariates=self.x[i],
            y=int(self.y[i]),
            t=int(self.t[i]),
            y_obs=int(self.y_obs[i]),
            score=None if self.score is None else float(self.score[i]),
        )

    def patients(self) -> list[Patient]:
        return [self.patient(i) for i in range(len(self))]

    def mask(self, group: GroupId | int | None) -> np.ndarray:
        if group is None:
            return np.ones(len(self), dtype=bool)
        return self.group == int(group)

    def with_scores(self, scores: np.ndarray) -> "Cohort":
        return dataclasses.replace(self, score=np.asarray(scores, dtype=np.float64))

    def subset(self, index) -> "Cohort":
        return Cohort(
            group=self.group[index],
            x=self.x[index],
            y=self.y[index],
            t=self.t[index],
            y_obs=self.y_obs[index],
            score=None if self.score is None else self.score[index],
            metadata=dict(self.metadata),
        )

    @classmethod
    def from_patients(cls, patients: list[Patient]) -> "Cohort":
        if not patients:
            raise ValueError("cannot build a cohort from zero patients")
        dims = {len(p.covariates) for p in patients}
        if len(dims) != 1:
            raise ValueError(f"patients disagree on covariate dimension: {sorted(dims)}")
        scores = [p.score for p in patients]
        return cls(
            group=np.array([int(p.group) for p in patients]),
            x=np.vstack([np.asarray(p.covariates, dtype=np.float64) for p in patients]),
            y=np.array([p.y for p in patients]),
            t=np.array([p.t for p in patients]),
            y_obs=np.array([p.y_obs for p in patients]),
            score=None if any(s is None for s in scores) else np.array(scores, dtype=np.float64),
        )

    def to_polars(self) -> pl.DataFrame:
        """Frame with columns group,y,t,y_obs,score,x1..xd."""
        columns = {
            "group": self.group.astype(np.int64),
            "y": self.y.astype(np.int64),
            "t": self.t.astype(np.int64),
            "y_obs": self.y_obs.astype(np.int64),
            "score": self.score if self.score is not None else np.full(len(self), np.nan),
        }
        for j in range(self.d):
            columns[f"x{j + 1}"] = self.x[:, j]
        return pl.DataFrame(columns)
