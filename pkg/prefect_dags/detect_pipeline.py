import json
import os

from prefect import flow, get_run_logger, task
from prefect.cache_policies import NO_CACHE

from src.detect.hypothesis_tests import bonferroni, two_proportion_ztest
from src.detect.records import TestingRecordTable, testing_rates, ztest_frame
from src.reporting.reporting_funcs import log_table_result


@task(name="ztest", cache_policy=NO_CACHE)
def ztest_task(rate_row, alpha):
    return two_proportion_ztest(
        rate_row["p0"], rate_row["n0"], rate_row["p1"], rate_row["n1"], alpha=alpha, test=rate_row["test"]
    )


@flow(log_prints=True, validate_parameters=False)
def run_detection(
    table: TestingRecordTable,
    tests: list[str] | None = None,
    alpha: float = 0.01,
    out_dir: str | None = None,
):
    """Testing-rate z-test per test name at alpha / m; writes ztests.csv and detect.json to out_dir."""
    logger = get_run_logger()
    rates = testing_rates(table, tests)
    corrected = bonferroni(alpha, rates.height)
    logger.info(f"{rates.height} tests, {len(table)} admissions, corrected alpha {corrected:.3g}")

    futures = [ztest_task.submit(row, corrected) for row in rates.iter_rows(named=True)]
    results = [f.result() for f in futures]
    for r in results:
        print(f"{r.test}: p0={r.p0:.4f} p1={r.p1:.4f} z={r.z:.2f} p={r.p_value:.3g}{' *' if r.significant else ''}")

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        log_table_result(ztest_frame(results), "ztests", {"file", "prefect"}, path=out_dir)
        with open(os.path.join(out_dir, "detect.json"), "w") as f:
            json.dump(
                {
                    "alpha": alpha,
                    "corrected_alpha": corrected,
                    "n_admissions": len(table),
                    "results": [r.to_row() for r in results],
                },
                f,
                indent=2,
            )
    return results
