import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import numpy.typing as npt
from prefect.logging import get_logger

from src.classifier.encoding import Encoder, auto_gamma, encode
from src.classifier.platt import fit_platt, platt_probability
from src.classifier.smo import RbfKernel, rbf_cross_kernel, solve_smo
from src.core.exceptions import ConfigError
from src.core.rng import Rng
from src.core.types import Cohort

logger = get_logger(__name__)

LABEL_KINDS = ("true", "observed")
# Test rows scored per kernel block
SCORE_BLOCK = 4096


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_iter: int = 1_000_000
    cache_rows: int = 4096
    platt: bool = False
    platt_folds: int = 5
    gamma: Optional[float] = None
    debug_checks: bool = False

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError(f"C must be > 0, got {self.C}", key="C")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}", key="tol")
        if self.platt_folds == 1 or self.platt_folds < 0:
            raise ConfigError(
                f"platt_folds must be 0 (fit on training values) or >= 2, got {self.platt_folds}",
                key="platt_folds",
            )


@dataclass
class TrainedScorer:
    """
    Fitted RBF SVM: f(x) = sum_k dual_coef_k K(sv_k, encode(x)) + bias.

    dual_coef holds alpha_k * y_k for the support vectors; platt_a/platt_b are set when
    the model is calibrated, and `score` then returns probabilities.
    """

    support_indices: np.ndarray
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    gamma: float
    C: float
    encoder: Encoder
    platt_a: float | None = None
    platt_b: float | None = None
    support_decisions: np.ndarray | None = None
    train_info: dict = field(default_factory=dict)

    @property
    def calibrated(self) -> bool:
        return self.platt_a is not None and self.platt_b is not None

    def to_dict(self) -> dict:
        return {
            "support_indices": self.support_indices.tolist(),
            "support_vectors": self.support_vectors.astype(np.int8).tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "gamma": self.gamma,
            "C": self.C,
            "encoder": {"d": self.encoder.d, "bins_per_dim": self.encoder.bins_per_dim},
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "support_decisions": None if self.support_decisions is None else self.support_decisions.tolist(),
            "train_info": self.train_info,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, values: dict) -> "TrainedScorer":
        return cls(
            support_indices=np.asarray(values["support_indices"], dtype=np.int64),
            support_vectors=np.asarray(values["support_vectors"], dtype=np.float64),
            dual_coef=np.asarray(values["dual_coef"], dtype=np.float64),
            bias=float(values["bias"]),
            gamma=float(values["gamma"]),
            C=float(values["C"]),
            encoder=Encoder(**values["encoder"]),
            platt_a=values.get("platt_a"),
            platt_b=values.get("platt_b"),
            support_decisions=None
            if values.get("support_decisions") is None
            else np.asarray(values["support_decisions"], dtype=np.float64),
            train_info=values.get("train_info", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "TrainedScorer":
        return cls.from_dict(json.loads(text))


def training_labels(cohort: Cohort, labels: str) -> np.ndarray:
    if labels not in LABEL_KINDS:
        raise ValueError(f"labels must be one of {LABEL_KINDS}, got {labels!r}")
    return cohort.y if labels == "true" else cohort.y_obs


def _fit_dual(X: np.ndarray, y01: np.ndarray, gamma: float, config: SvmConfig):
    signs = np.where(y01 > 0, 1.0, -1.0)
    kernel = RbfKernel(X, gamma, cache_rows=config.cache_rows)
    solution = solve_smo(
        kernel,
        signs,
        C=config.C,
        tol=config.tol,
        max_iter=config.max_iter,
        debug_checks=config.debug_checks,
    )
    support = np.flatnonzero(solution.beta)
    return solution, support


def _decision(X_support, dual_coef, bias, gamma, X) -> np.ndarray:
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], SCORE_BLOCK):
        block = rbf_cross_kernel(X[start : start + SCORE_BLOCK], X_support, gamma)
        # Reduction stays in numpy: output independent of BLAS thread count.
        out[start : start + SCORE_BLOCK] = (block * dual_coef).sum(axis=1) + bias
    return out


def _cross_validated_decisions(X, y01, gamma, config: SvmConfig, rng: Rng, fallback) -> np.ndarray:
    """Out-of-fold decision values for the Platt fit."""
    order = rng.permutation(len(y01))
    values = np.array(fallback, dtype=np.float64, copy=True)
    for fold in np.array_split(order, config.platt_folds):
        train = np.setdiff1d(order, fold, assume_unique=True)
        if np.unique(y01[train]).size < 2:
            warnings.warn(
                "Platt fold has single-class training labels; using full-model decision values for it",
                UserWarning,
            )
            continue
        solution, support = _fit_dual(X[train], y01[train], gamma, config)
        values[fold] = _decision(
            X[train][support], solution.beta[support], solution.bias, gamma, X[fold]
        )
    return values


def train_svm(
    cohort: Cohort,
    labels: str = "true",
    config: SvmConfig | None = None,
    rng: Rng | None = None,
) -> TrainedScorer:
    """
    Train the RBF SVM on the one-hot encoded covariates with true (y) or observed (y_obs) labels.

    rng drives the cross-validation folds of the Platt fit and is only needed when
    config.platt is set with platt_folds >= 2.
    """
    config = config or SvmConfig()
    y01 = training_labels(cohort, labels)
    if np.unique(y01).size < 2:
        raise ValueError(f"cannot train on single-class {labels} labels (all {int(y01[0])})")

    encoder = Encoder(d=cohort.d)
    X = encode(cohort.x, encoder)
    gamma = config.gamma if config.gamma is not None else auto_gamma(X)
    solution, support = _fit_dual(X, y01, gamma, config)
    train_decisions = (y01 * 2.0 - 1.0) - solution.gradient + solution.bias

    model = TrainedScorer(
        support_indices=support,
        support_vectors=X[support],
        dual_coef=solution.beta[support],
        bias=solution.bias,
        gamma=gamma,
        C=config.C,
        encoder=encoder,
        support_decisions=train_decisions[support],
        train_info={
            "labels": labels,
            "iterations": solution.iterations,
            "max_violation": solution.max_violation,
            "tol": config.tol,
            "dual_objective": solution.objective,
            "n_train": len(cohort),
        },
    )

    if config.platt:
        if config.platt_folds >= 2:
            if rng is None:
                raise ValueError("Platt cross-validation needs an Rng")
            values = _cross_validated_decisions(X, y01, gamma, config, rng, train_decisions)
        else:
            values = train_decisions
        model.platt_a, model.platt_b = fit_platt(values, y01)
        if model.platt_a >= 0:
            warnings.warn(
                f"Platt slope A={model.platt_a:.3g} is not negative; probabilities do not preserve score order",
                UserWarning,
            )
    logger.debug(
        "trained %s-label SVM: %d support vectors, gamma=%.4g, %d SMO iterations",
        labels,
        support.size,
        gamma,
        solution.iterations,
    )
    return model


def decision_function(model: TrainedScorer, x: npt.ArrayLike):
    """Raw margin f(x) for one covariate vector or an (n, d) matrix."""
    x = np.asarray(x, dtype=np.float64)
    X = np.atleast_2d(encode(x, model.encoder))
    values = _decision(model.support_vectors, model.dual_coef, model.bias, model.gamma, X)
    return float(values[0]) if x.ndim == 1 else values


def score(model: TrainedScorer, x: npt.ArrayLike):
    """Platt probability when the model is calibrated, else the raw decision value."""
    values = decision_function(model, x)
    if model.calibrated:
        values = platt_probability(values, model.platt_a, model.platt_b)
        return float(values) if np.ndim(values) == 0 else values
    return values
