import math

import polars as pl
import pytest

from src.harness.aggregate import SweepResult, cell_rows, emit_heatmap, sweep_table
from src.harness.cells import RealizationResult
from src.harness.experiment import ExperimentSpec, expand_grid
from src.metrics.gaps import GapReport


def fake_report(auc_0, auc_1, censorship_rate_1=0.4):
    return GapReport(
        auc_overall=0.8,
        auc_0=auc_0,
        auc_1=auc_1,
        xauc_01=0.8,
        xauc_10=0.7,
        delta_auc=abs(auc_1 - auc_0),
        delta_xauc=0.1,
        missed_positive_rate_0=0.1,
        missed_positive_rate_1=0.3,
        missed_positive_rate_all=0.2,
        censorship_rate_0=0.2,
        censorship_rate_1=censorship_rate_1,
    )


def fake_results(n=5):
    return [
        RealizationResult(
            realization=r,
            seed=r,
            reports={"oracle": fake_report(0.9, 0.9), "censored": fake_report(0.9, 0.8 + 0.01 * r)},
        )
        for r in range(n)
    ]


@pytest.fixture
def spec():
    return ExperimentSpec(axes={"tau1": [5.0, 7.0]}, base={"tau0": 5.0}, realizations=5)


def test_rows_per_model_and_metric(spec):
    rows = cell_rows(spec, 0, expand_grid(spec)[0], fake_results())
    assert len(rows) == 2 * len(spec.metrics)
    censored = next(r for r in rows if r["model"] == "censored" and r["metric"] == "delta_auc")
    assert censored["median"] == pytest.approx(8.0)
    assert censored["ci_lo"] < censored["median"] < censored["ci_hi"]
    assert censored["censorship_rate_1"] == pytest.approx(0.4)
    assert censored["n_realizations"] == 5
    assert censored["tau1"] == 5.0
    assert not censored["failed"]


def test_fractions_without_percentage_points(spec):
    rows = cell_rows(spec, 0, expand_grid(spec)[0], fake_results(), percentage_points=False)
    oracle = next(r for r in rows if r["model"] == "oracle" and r["metric"] == "auc_0")
    assert oracle["median"] == pytest.approx(0.9)


def test_failed_cell_keeps_nan_rows(spec):
    rows = cell_rows(spec, 1, expand_grid(spec)[1], [], error="realization 0 failed")
    table = sweep_table(rows)
    assert table.height == 2 * len(spec.metrics)
    assert table["median"].is_nan().all()
    assert table["failed"].all()
    assert table["error"][0] == "realization 0 failed"
    assert math.isnan(rows[0]["censorship_rate_1"])


def _result(spec):
    rows = []
    for i, cell in enumerate(expand_grid(spec)):
        rows.extend(cell_rows(spec, i, cell, fake_results()))
    return SweepResult(spec=spec, table=sweep_table(rows))


def test_heatmap_matches_table(tmp_path):
    spec = ExperimentSpec(axes={"tau0": [5.0, 6.0], "tau1": [5.0, 6.0, 7.0]}, realizations=5)
    result = _result(spec)
    long, wide = emit_heatmap(result, "delta_auc", "tau1", "tau0", out_dir=str(tmp_path))
    assert long.height == 6
    assert wide.shape == (2, 4)
    expected = result.table.filter((pl.col("metric") == "delta_auc") & (pl.col("model") == "censored"))
    assert sorted(long["median"].to_list()) == sorted(expected["median"].to_list())
    assert (tmp_path / "heatmap_delta_auc.csv").exists()
    assert (tmp_path / "heatmap_delta_auc_wide.csv").exists()
    emit_heatmap(result, "delta_auc", "tau1", "tau0", model="oracle", out_dir=str(tmp_path))
    assert (tmp_path / "heatmap_delta_auc_oracle.csv").exists()


def test_single_cell_heatmap():
    spec = ExperimentSpec(axes={"tau1": [7.0]}, realizations=5)
    long, wide = emit_heatmap(_result(spec), "delta_auc", "tau1", "tau0")
    assert long.height == 1
    assert wide.shape == (1, 2)


def test_heatmap_rejects_ambiguous_axes():
    spec = ExperimentSpec(axes={"tau0": [5.0, 6.0], "tau1": [5.0, 6.0]}, realizations=5)
    with pytest.raises(ValueError, match="uniquely"):
        emit_heatmap(_result(spec), "delta_auc", "tau1", "setting")
    with pytest.raises(ValueError, match="not in sweep result"):
        emit_heatmap(_result(spec), "brier", "tau1", "tau0")
    with pytest.raises(ValueError):
        emit_heatmap(_result(spec), "delta_auc", "tau1", "lambda")
