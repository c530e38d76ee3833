import math
import os
from dataclasses import dataclass, field

import numpy as np
import polars as pl

from src.harness.cells import RealizationResult
from src.harness.experiment import ExperimentSpec, cell_config, cell_kl
from src.metrics.gaps import RANKING_METRICS, empirical_ci

# Per-cell means of the censoring rates, reported as fractions
AUX_RATES = (
    "missed_positive_rate_0",
    "missed_positive_rate_1",
    "missed_positive_rate_all",
    "censorship_rate_0",
    "censorship_rate_1",
)
STAT_COLUMNS = ("median", "ci_lo", "ci_hi")


@dataclass
class SweepResult:
    spec: ExperimentSpec
    table: pl.DataFrame
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return bool(self.failures)


def config_columns(spec: ExperimentSpec) -> list[str]:
    extra = ["delta_mu"] if "delta_mu" in spec.axes else []
    return ["cell", "setting", "tau0", "tau1", "phi", "d_rot", "mu0", "mu1", "sigma2", "c"] + extra + ["kl"]


def cell_rows(
    spec: ExperimentSpec,
    cell_index: int,
    cell: dict,
    results: list[RealizationResult],
    error: str | None = None,
    percentage_points: bool = True,
) -> list[dict]:
    """
    Long-format rows for one cell: one per (model, metric).

    Statistics are medians and 95% empirical CIs across realizations; ranking metrics are
    scaled to percentage points when percentage_points is set. A failed cell keeps its
    rows with NaN statistics.
    """
    config = cell_config(spec, cell)
    failed = error is not None
    base = {
        "cell": cell_index,
        "setting": spec.setting,
        "tau0": config.tau0,
        "tau1": config.tau1,
        "phi": config.phi,
        "d_rot": config.d_rot,
        "mu0": config.mu0,
        "mu1": config.mu1,
        "sigma2": config.sigma2,
        "c": config.c,
    }
    if "delta_mu" in cell:
        base["delta_mu"] = cell["delta_mu"]
    base["kl"] = cell_kl(config)

    aux = {}
    for rate in AUX_RATES:
        values = [getattr(next(iter(r.reports.values())), rate) for r in results]
        aux[rate] = float(np.mean(values)) if values and not failed else math.nan

    scale = 100.0 if percentage_points else 1.0
    rows = []
    for model in spec.models:
        for metric in spec.metrics:
            if failed:
                stats = dict.fromkeys(STAT_COLUMNS, math.nan)
            else:
                summary = empirical_ci([getattr(r.reports[model], metric) for r in results])
                factor = scale if metric in RANKING_METRICS else 1.0
                stats = {
                    "median": summary.median * factor,
                    "ci_lo": summary.lower * factor,
                    "ci_hi": summary.upper * factor,
                }
            rows.append(
                {
                    **base,
                    "model": model,
                    "metric": metric,
                    **stats,
                    **aux,
                    "n_realizations": 0 if failed else len(results),
                    "failed": failed,
                    "error": error or "",
                }
            )
    return rows


def sweep_table(rows: list[dict]) -> pl.DataFrame:
    """Rows in (cell, model, metric) emission order; Float64 statistics even when all NaN."""
    frame = pl.DataFrame(rows, infer_schema_length=None)
    float_columns = [c for c in STAT_COLUMNS + AUX_RATES + ("kl",) if c in frame.columns]
    return frame.with_columns(pl.col(float_columns).cast(pl.Float64))


def emit_heatmap(
    result: SweepResult | pl.DataFrame,
    metric: str,
    x_axis: str,
    y_axis: str,
    model: str = "censored",
    out_dir: str | None = None,
) -> tuple[pl.DataFrame, pl.DataFrame]:
    """
    Median of `metric` over an (x_axis, y_axis) grid, as long (x, y, median) and wide frames.

    y_axis may be any table column, including the per-cell mean censorship_rate_1, so the
    y coordinate is the empirical censorship rate rather than the threshold that set it.
    With out_dir, writes heatmap_<metric>.csv and heatmap_<metric>_wide.csv; models other
    than the censored one get a _<model> suffix.
    """
    table = result.table if isinstance(result, SweepResult) else result
    if metric not in table["metric"].unique().to_list():
        raise ValueError(f"metric {metric!r} not in sweep result")
    for axis in (x_axis, y_axis):
        if axis not in table.columns:
            raise ValueError(f"axis {axis!r} not in sweep result columns")

    selected = table.filter((pl.col("metric") == metric) & (pl.col("model") == model))
    if selected.is_empty():
        raise ValueError(f"no rows for model {model!r}")
    long = selected.select(x_axis, y_axis, "median").sort([y_axis, x_axis])
    if long.select(x_axis, y_axis).is_duplicated().any():
        raise ValueError(f"({x_axis}, {y_axis}) does not identify sweep cells uniquely")
    wide = long.pivot(on=x_axis, index=y_axis, values="median")

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        stem = f"heatmap_{metric}" if model == "censored" else f"heatmap_{metric}_{model}"
        long.write_csv(os.path.join(out_dir, f"{stem}.csv"))
        wide.write_csv(os.path.join(out_dir, f"{stem}_wide.csv"))
    return long, wide
