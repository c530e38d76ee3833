from dataclasses import dataclass

import polars as pl
from prefect.logging import get_logger

from src.core.exceptions import SchemaError, UndefinedMetricError
from src.detect.hypothesis_tests import ZTestResult, bonferroni, two_proportion_ztest

logger = get_logger(__name__)

ID_COLUMN = "admission_id"
GROUP_COLUMN = "group"
BINARY = ["0", "1"]
ZTEST_COLUMNS = ["test", "p0", "p1", "z", "p", "n0", "n1", "alpha", "significant"]


@dataclass(frozen=True)
class TestingRecordTable:
    """One row per admission: admission_id, group (0/1) and one 0/1 column per test."""

    frame: pl.DataFrame
    tests: tuple[str, ...]

    def __len__(self) -> int:
        return self.frame.height


def _bad_rows(frame: pl.DataFrame, expr: pl.Expr) -> list[int]:
    return frame.filter(expr)["_row"].to_list()


def records_from_frame(
    frame: pl.DataFrame,
    tests: list[str] | None = None,
    subset_column: str | None = None,
) -> TestingRecordTable:
    """
    Validate a testing-record frame and cast flags to integers.

    All cells are compared as text, so "1" and 1 are both accepted. Rows are numbered
    from 1 after the header. With subset_column, only rows flagged 1 in it are kept.
    """
    frame = frame.select(pl.all().cast(pl.Utf8)).with_row_index("_row", offset=1)

    required = [ID_COLUMN, GROUP_COLUMN] + ([subset_column] if subset_column else [])
    reserved = set(required) | {"_row"}
    if tests is None:
        tests = [c for c in frame.columns if c not in reserved]
    missing = [c for c in required + list(tests) if c not in frame.columns]
    if missing:
        raise SchemaError("testing records are missing required columns", columns=missing)
    if not tests:
        raise SchemaError("testing records have no test columns")

    for column in [GROUP_COLUMN] + ([subset_column] if subset_column else []) + list(tests):
        bad = _bad_rows(frame, ~pl.col(column).str.strip_chars().is_in(BINARY) | pl.col(column).is_null())
        if bad:
            raise SchemaError(f"column '{column}' must hold 0/1 values", rows=bad, columns=[column])
    bad = _bad_rows(frame, pl.col(ID_COLUMN).is_null())
    if bad:
        raise SchemaError("admission_id is missing", rows=bad)
    bad = _bad_rows(frame, pl.col(ID_COLUMN).is_duplicated())
    if bad:
        raise SchemaError("admission_id values must be unique", rows=bad)

    flags = [GROUP_COLUMN] + ([subset_column] if subset_column else []) + list(tests)
    frame = frame.with_columns(pl.col(flags).str.strip_chars().cast(pl.Int8))
    if subset_column:
        before = frame.height
        frame = frame.filter(pl.col(subset_column) == 1)
        logger.info("subset '%s' keeps %d of %d admissions", subset_column, frame.height, before)
    return TestingRecordTable(
        frame=frame.select([ID_COLUMN, GROUP_COLUMN] + list(tests)),
        tests=tuple(tests),
    )


def load_testing_records(
    path: str, tests: list[str] | None = None, subset_column: str | None = None
) -> TestingRecordTable:
    """Read `admission_id,group,<test_1>,...` in one pass; every column is read as text."""
    frame = pl.scan_csv(path, infer_schema_length=0).collect()
    return records_from_frame(frame, tests=tests, subset_column=subset_column)


def testing_rates(table: TestingRecordTable, tests: list[str] | None = None) -> pl.DataFrame:
    """Per-test testing proportion and admission count per group: test, p0, n0, p1, n1."""
    tests = list(tests or table.tests)
    unknown = [t for t in tests if t not in table.tests]
    if unknown:
        raise SchemaError("unknown test columns", columns=unknown)

    by_group = table.frame.group_by(GROUP_COLUMN).agg(pl.len().alias("n"), pl.col(tests).mean())
    rows = {int(r[GROUP_COLUMN]): r for r in by_group.iter_rows(named=True)}
    for group in (0, 1):
        if group not in rows:
            raise UndefinedMetricError(f"no admissions in group {group}; testing rates undefined")
    return pl.DataFrame(
        {
            "test": tests,
            "p0": [float(rows[0][t]) for t in tests],
            "n0": [int(rows[0]["n"])] * len(tests),
            "p1": [float(rows[1][t]) for t in tests],
            "n1": [int(rows[1]["n"])] * len(tests),
        }
    )


def detect_disparate_censorship(
    table: TestingRecordTable, tests: list[str] | None = None, alpha: float = 0.01
) -> list[ZTestResult]:
    """Two-proportion z-test per test at the Bonferroni-corrected level alpha / m."""
    rates = testing_rates(table, tests)
    corrected = bonferroni(alpha, rates.height)
    return [
        two_proportion_ztest(r["p0"], r["n0"], r["p1"], r["n1"], alpha=corrected, test=r["test"])
        for r in rates.iter_rows(named=True)
    ]


def ztest_frame(results: list[ZTestResult]) -> pl.DataFrame:
    if not results:
        return pl.DataFrame(schema={c: pl.Utf8 for c in ZTEST_COLUMNS})
    return pl.DataFrame([r.to_row() for r in results]).select(ZTEST_COLUMNS)
