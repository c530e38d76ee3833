import os

import numpy as np
import polars as pl

from src.core.exceptions import SchemaError
from src.core.types import Cohort

REQUIRED_COLUMNS = ["group", "y", "t", "y_obs"]


def covariate_columns(columns: list[str]) -> list[str]:
    """x1..xd in numeric order."""
    xs = [c for c in columns if c.startswith("x") and c[1:].isdigit()]
    return sorted(xs, key=lambda c: int(c[1:]))


def write_cohort_csv(cohort: Cohort, path: str) -> str:
    """Write a cohort with header group,y,t,y_obs,score,x1..xd."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    cohort.to_polars().write_csv(path)
    return path


def cohort_from_frame(frame: pl.DataFrame, score_column: str = "score") -> Cohort:
    """
    Build a Cohort from a frame with group,y,t,y_obs,[score],x1..xd columns.

    Row-level violations raise SchemaError listing 1-based data-row numbers.
    """
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    xs = covariate_columns(frame.columns)
    if not xs:
        missing.append("x1..xd")
    if missing:
        raise SchemaError("cohort table is missing required columns", columns=missing)

    frame = frame.with_row_index("_row", offset=1)
    for name in ("group", "y", "t", "y_obs"):
        bad = frame.filter(~pl.col(name).is_in([0, 1]) | pl.col(name).is_null())
        if bad.height:
            raise SchemaError(f"column '{name}' must be 0/1", rows=bad["_row"].to_list())
    bad = frame.filter(pl.col("y_obs") != pl.col("y") * pl.col("t"))
    if bad.height:
        raise SchemaError("y_obs must equal y*t", rows=bad["_row"].to_list())
    out_of_range = frame.filter(
        pl.any_horizontal([(pl.col(c) < 0) | (pl.col(c) > 1) | pl.col(c).is_null() for c in xs])
    )
    if out_of_range.height:
        raise SchemaError("covariates must lie in [0, 1]", rows=out_of_range["_row"].to_list())

    score = None
    if score_column in frame.columns:
        score_values = frame[score_column].cast(pl.Float64)
        if score_values.is_null().any() or score_values.is_nan().any():
            if score_values.is_nan().all() or score_values.is_null().all():
                score = None
            else:
                bad_rows = frame.filter(
                    pl.col(score_column).is_null() | pl.col(score_column).cast(pl.Float64).is_nan()
                )["_row"].to_list()
                raise SchemaError(f"column '{score_column}' has missing values", rows=bad_rows)
        else:
            score = score_values.to_numpy()

    return Cohort(
        group=frame["group"].to_numpy(),
        x=frame.select(xs).to_numpy().astype(np.float64),
        y=frame["y"].to_numpy(),
        t=frame["t"].to_numpy(),
        y_obs=frame["y_obs"].to_numpy(),
        score=score,
    )


def read_cohort_csv(path: str, score_column: str = "score") -> Cohort:
    return cohort_from_frame(pl.read_csv(path), score_column=score_column)
