import os
import sys
import time

import hydra
from omegaconf import DictConfig, OmegaConf
from prefect import flow, get_run_logger, task
from prefect.cache_policies import NO_CACHE
from prefect.task_runners import ThreadPoolTaskRunner

from prefect_dags.reporting_pipeline import SweepReportingPipeline
from src.classifier.scorer import SvmConfig
from src.core.exceptions import RealizationError
from src.core.types import load_structured
from src.harness.aggregate import SweepResult, cell_rows, sweep_table
from src.harness.cells import run_realization
from src.harness.experiment import ExperimentSpec, cell_config, expand_grid

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# One work unit = (cell, realization); failures are returned, not raised
@task(name="realization", cache_policy=NO_CACHE)
def realization_task(config, train_labels, realization, svm_config):
    try:
        return run_realization(config, train_labels, realization, svm_config), None
    except RealizationError as e:
        return None, str(e)


@flow(log_prints=True, validate_parameters=False)
def run_sweep(
    spec: ExperimentSpec,
    svm_config: SvmConfig | None = None,
    percentage_points: bool = True,
) -> SweepResult:
    logger = get_run_logger()
    cells = expand_grid(spec)
    logger.info(
        f"Sweep '{spec.name}': {len(cells)} cells x {spec.realizations} realizations, models {spec.models}"
    )

    futures = {}
    for i, cell in enumerate(cells):
        config = cell_config(spec, cell)
        for r in range(spec.realizations):
            futures[(i, r)] = realization_task.submit(config, spec.train_labels, r, svm_config)

    # Reduce in (cell, realization) order so the table does not depend on scheduling
    rows, failures = [], {}
    for i, cell in enumerate(cells):
        outcomes = [futures[(i, r)].result() for r in range(spec.realizations)]
        errors = [error for _, error in outcomes if error is not None]
        results = [result for result, _ in outcomes if result is not None]
        error = "; ".join(errors) if errors else None
        if error:
            failures[i] = error
        rows.extend(cell_rows(spec, i, cell, results, error, percentage_points))
        status = f"FAILED ({len(errors)} realizations)" if error else "done"
        print(f"Cell {i + 1}/{len(cells)} {cell}: {status}")

    if failures:
        logger.warning(f"{len(failures)} of {len(cells)} cells failed: {sorted(failures)}")
    return SweepResult(spec=spec, table=sweep_table(rows), failures=failures)


def sweep(
    spec: ExperimentSpec,
    jobs: int = 1,
    svm_config: SvmConfig | None = None,
    percentage_points: bool = True,
) -> SweepResult:
    """Run the sweep flow on a thread pool of `jobs` workers."""
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    runner = ThreadPoolTaskRunner(max_workers=jobs)
    return run_sweep.with_options(task_runner=runner)(spec, svm_config, percentage_points)


def sweep_from_config(config: dict) -> SweepResult:
    """Sweep described by a resolved config_main: spec path, overrides, SVM and reporting groups."""
    sweep_config = config["sweep_config"]
    spec_path = sweep_config["spec_path"]
    if not os.path.isabs(spec_path):
        spec_path = os.path.join(REPO_ROOT, spec_path)
    spec = ExperimentSpec.from_json(spec_path)
    if sweep_config.get("realizations"):
        spec = spec.replace(realizations=int(sweep_config["realizations"]))
    svm_config = load_structured(SvmConfig, config["svm_config"])
    reporting = config["reporting_config"]

    start = time.perf_counter()
    result = sweep(
        spec,
        jobs=int(config["global_config"]["JOBS"]),
        svm_config=svm_config,
        percentage_points=reporting["local_reporting"]["percentage_points"],
    )
    out_dir = os.path.join(reporting["local_reporting"]["reporting_path_base"], spec.name)
    SweepReportingPipeline(reporting).run(
        result, out_dir, command="sweep", wall_time=time.perf_counter() - start
    )
    return result


@hydra.main(version_base=None, config_path="../configs_and_globals", config_name="config_main")
def hydra_sweep_pipeline(cfg: DictConfig):
    result = sweep_from_config(OmegaConf.to_container(cfg, resolve=True))
    # Failed cells are an analysis failure, same exit code as the censorlab CLI
    if result.failed:
        sys.exit(1)


if __name__ == "__main__":
    hydra_sweep_pipeline()
