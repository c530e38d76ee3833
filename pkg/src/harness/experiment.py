import dataclasses
import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from src.core.exceptions import ConfigError
from src.core.types import SimulationConfig, load_structured
from src.synthgen.dgp import setting_config
from src.theory.undertesting import marginal_kl

# Canonical axis order; grid cells are enumerated lexicographically in this order
AXES = ("tau0", "tau1", "phi", "d_rot", "delta_mu", "sigma2")
INTEGER_AXES = ("d_rot",)
TRAIN_LABELS = ("both", "true", "observed")
# Model names per label kind
MODELS = {"true": "oracle", "observed": "censored"}
# Mean shift axis keeps mu0 + mu1 fixed at this sum
DELTA_MU_SUM = 0.9
BASE_KEYS = ("mu0", "mu1", "sigma2", "tau0", "tau1", "c", "b", "phi", "d_rot", "d")


@dataclass
class HeatmapSpec:
    metric: str = "delta_auc"
    x_axis: str = "phi"
    y_axis: str = "censorship_rate_1"
    model: str = "censored"


@dataclass
class ExperimentSpec:
    """
    One sweep: a simulation setting, value lists per axis and the realization budget.

    base overrides SimulationConfig fields for every cell; axes override base.
    """

    name: str = "sweep"
    setting: int = 2
    axes: Dict[str, List[float]] = field(default_factory=dict)
    realizations: int = 100
    n_train: int = 2000
    n_test: int = 20000
    master_seed: int = 0
    train_labels: str = "both"
    base: Dict[str, float] = field(default_factory=dict)
    metrics: List[str] = field(
        default_factory=lambda: [
            "auc_overall",
            "auc_0",
            "auc_1",
            "xauc_01",
            "xauc_10",
            "delta_auc",
            "delta_xauc",
        ]
    )
    heatmaps: List[HeatmapSpec] = field(default_factory=list)
    description: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.setting not in (1, 2, 3):
            raise ConfigError(f"setting must be 1, 2 or 3, got {self.setting}", key="setting")
        if self.train_labels not in TRAIN_LABELS:
            raise ConfigError(
                f"train_labels must be one of {TRAIN_LABELS}, got {self.train_labels!r}",
                key="train_labels",
            )
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}", key="realizations")
        for name in self.axes:
            if name not in AXES:
                raise ConfigError(f"unknown sweep axis {name!r}; expected one of {AXES}", key=f"axes.{name}")
            if len(self.axes[name]) == 0:
                raise ConfigError("sweep axis has no values", key=f"axes.{name}")
        for name in self.base:
            if name not in BASE_KEYS:
                raise ConfigError(f"unknown base override {name!r}", key=f"base.{name}")
        if "delta_mu" in self.axes:
            if {"mu0", "mu1"} & set(self.base):
                raise ConfigError("delta_mu sweeps fix mu0 + mu1; do not set mu0/mu1 in base", key="axes.delta_mu")
            for value in self.axes["delta_mu"]:
                if not 0.0 <= value <= DELTA_MU_SUM:
                    raise ConfigError(f"delta_mu must lie in [0, {DELTA_MU_SUM}], got {value}", key="axes.delta_mu")
        if self.setting == 3 and "phi" not in self.axes and "phi" not in self.base:
            raise ConfigError("setting 3 sweeps need a phi axis", key="axes.phi")
        for i, heatmap in enumerate(self.heatmaps):
            if heatmap.metric not in self.metrics:
                raise ConfigError(f"heatmap metric {heatmap.metric!r} is not swept", key=f"heatmaps.{i}.metric")
        # Every cell must build a valid SimulationConfig
        for cell in expand_grid(self):
            try:
                cell_config(self, cell)
            except ConfigError as e:
                raise ConfigError(f"cell {cell}: {e}", key=f"axes.{e.key}" if e.key in self.axes else e.key) from e

    @property
    def models(self) -> list[str]:
        kinds = ["true", "observed"] if self.train_labels == "both" else [self.train_labels]
        return [MODELS[k] for k in kinds]

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentSpec":
        return load_structured(cls, values)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        try:
            values = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}") from e
        return cls.from_dict(values)


def expand_grid(spec: ExperimentSpec) -> list[dict]:
    """Cartesian product of the axes in canonical order, values ascending and deduplicated."""
    names = [a for a in AXES if a in spec.axes]
    for name in names:
        if len(spec.axes[name]) == 0:
            raise ValueError(f"sweep axis {name!r} has no values")
    values = [sorted(set(float(v) for v in spec.axes[name])) for name in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*values)]


def cell_config(spec: ExperimentSpec, cell: dict) -> SimulationConfig:
    """SimulationConfig for one grid cell: setting preset, then base overrides, then axis values."""
    values = {k: v for k, v in spec.base.items()}
    for name, value in cell.items():
        if name == "delta_mu":
            values["mu0"] = (DELTA_MU_SUM - value) / 2.0
            values["mu1"] = (DELTA_MU_SUM + value) / 2.0
        else:
            values[name] = value
    for name in INTEGER_AXES + ("d",):
        if name in values:
            if float(values[name]) != int(values[name]):
                raise ConfigError(f"{name} must be an integer, got {values[name]}", key=name)
            values[name] = int(values[name])
    return setting_config(
        spec.setting,
        n_train=spec.n_train,
        n_test=spec.n_test,
        seed=spec.master_seed,
        **values,
    )


def cell_kl(config: SimulationConfig) -> float:
    return marginal_kl([config.mu0] * config.d, [config.mu1] * config.d, config.sigma2)
