from dataclasses import dataclass

from prefect.logging import get_logger

from src.classifier.scorer import SvmConfig, score, train_svm
from src.core.exceptions import RealizationError
from src.core.rng import SOLVER_STREAM, TEST_STREAM, TRAIN_STREAM, Rng, derive_realization_seed
from src.core.types import SimulationConfig
from src.harness.experiment import MODELS
from src.metrics.gaps import GapReport, gap_report
from src.synthgen.dgp import generate_cohort

logger = get_logger(__name__)


@dataclass(frozen=True)
class RealizationResult:
    realization: int
    seed: int
    reports: dict[str, GapReport]


def label_kinds(train_labels: str) -> list[str]:
    if train_labels == "both":
        return ["true", "observed"]
    if train_labels not in MODELS:
        raise ValueError(f"train_labels must be 'both', 'true' or 'observed', got {train_labels!r}")
    return [train_labels]


def run_realization(
    config: SimulationConfig,
    train_labels: str,
    realization: int,
    svm_config: SvmConfig | None = None,
) -> RealizationResult:
    """
    Train and evaluate the model(s) of one realization.

    The realization seed depends on (config.seed, realization) only, so every cell of a
    sweep draws the same covariate noise at a given index.
    """
    seed = derive_realization_seed(config.seed, realization)
    rng = Rng(seed)
    try:
        train = generate_cohort(config, config.n_train, rng.stream(TRAIN_STREAM))
        test = generate_cohort(config, config.n_test, rng.stream(TEST_STREAM))
        reports = {}
        for kind in label_kinds(train_labels):
            model = train_svm(train, labels=kind, config=svm_config, rng=rng.stream(SOLVER_STREAM))
            reports[MODELS[kind]] = gap_report(test.with_scores(score(model, test.x)))
    except Exception as e:
        raise RealizationError(realization, e) from e
    return RealizationResult(realization=realization, seed=seed, reports=reports)


def run_cell(
    config: SimulationConfig,
    train_labels: str,
    realization_indices,
    svm_config: SvmConfig | None = None,
) -> list[RealizationResult]:
    """Run realizations in index order; the first failure propagates with its index."""
    results = []
    for index in realization_indices:
        results.append(run_realization(config, train_labels, int(index), svm_config))
        logger.debug("realization %d done", index)
    return results
