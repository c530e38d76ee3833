import numpy as np
import polars as pl
import pytest

from prefect_dags.detect_pipeline import run_detection
from src.core.exceptions import SchemaError, UndefinedMetricError
from src.detect.records import (
    detect_disparate_censorship,
    load_testing_records,
    records_from_frame,
    testing_rates as group_testing_rates,
    ztest_frame,
)


def _write(tmp_path, text):
    path = tmp_path / "records.csv"
    path.write_text(text)
    return str(path)


def engineered_records(counts: dict, n0: int, n1: int) -> pl.DataFrame:
    """Records with exactly counts[test] = (tested in group 0, tested in group 1)."""
    columns = {"admission_id": np.arange(n0 + n1), "group": np.r_[np.zeros(n0), np.ones(n1)].astype(int)}
    for test, (k0, k1) in counts.items():
        flags = np.zeros(n0 + n1, dtype=int)
        flags[:k0] = 1
        flags[n0 : n0 + k1] = 1
        columns[test] = flags
    return pl.DataFrame(columns)


def test_loads_and_computes_rates(tmp_path):
    path = _write(tmp_path, "admission_id,group,CBC,BMP\na,0,1,0\nb,0,0,0\nc,1,1,1\nd,1,1,0\n")
    table = load_testing_records(path)
    assert table.tests == ("CBC", "BMP")
    assert len(table) == 4
    rates = group_testing_rates(table)
    assert rates["p0"].to_list() == [0.5, 0.0]
    assert rates["p1"].to_list() == [1.0, 0.5]
    assert rates["n0"].to_list() == [2, 2]


def test_bad_cell_reports_row_number(tmp_path):
    path = _write(tmp_path, "admission_id,group,CBC\na,0,1\nb,1,0\nc,1,yes\n")
    with pytest.raises(SchemaError) as info:
        load_testing_records(path)
    assert info.value.rows == [3]
    assert info.value.columns == ["CBC"]


def test_missing_and_duplicate_columns(tmp_path):
    with pytest.raises(SchemaError, match="group"):
        load_testing_records(_write(tmp_path, "admission_id,CBC\na,1\n"))
    with pytest.raises(SchemaError, match="unique") as info:
        load_testing_records(_write(tmp_path, "admission_id,group,CBC\na,0,1\na,1,0\n"))
    assert info.value.rows == [1, 2]


def test_group_must_be_binary():
    frame = pl.DataFrame({"admission_id": ["a", "b"], "group": ["0", "2"], "CBC": ["1", "0"]})
    with pytest.raises(SchemaError) as info:
        records_from_frame(frame)
    assert info.value.rows == [2]


def test_subset_column_filters_rows():
    frame = pl.DataFrame(
        {
            "admission_id": [1, 2, 3, 4],
            "group": [0, 0, 1, 1],
            "ed": [1, 0, 1, 1],
            "CBC": [1, 1, 0, 1],
        }
    )
    table = records_from_frame(frame, tests=["CBC"], subset_column="ed")
    assert len(table) == 3
    assert group_testing_rates(table)["p0"].to_list() == [1.0]


def test_one_group_only():
    table = records_from_frame(pl.DataFrame({"admission_id": [1, 2], "group": [0, 0], "CBC": [1, 0]}))
    with pytest.raises(UndefinedMetricError):
        group_testing_rates(table)


def test_unknown_test_column():
    table = records_from_frame(pl.DataFrame({"admission_id": [1, 2], "group": [0, 1], "CBC": [1, 0]}))
    with pytest.raises(SchemaError):
        group_testing_rates(table, ["ABG"])


def test_cbc_records_reproduce_published_z():
    n0, n1 = 337630, 80293
    counts = {"CBC": (round(0.7371 * n0), round(0.6820 * n1)), "Troponin T": (round(0.0872 * n0), round(0.0858 * n1))}
    table = records_from_frame(engineered_records(counts, n0, n1))
    cbc, troponin = detect_disparate_censorship(table, alpha=0.01)
    assert cbc.z == pytest.approx(30.46, abs=0.1)
    assert cbc.alpha == pytest.approx(0.005)
    assert cbc.significant
    assert not troponin.significant


def test_ztest_frame_columns():
    assert ztest_frame([]).columns == ["test", "p0", "p1", "z", "p", "n0", "n1", "alpha", "significant"]


def test_detection_flow_writes_outputs(prefect_harness, tmp_path):
    counts = {"CBC": (70, 40), "BMP": (50, 50)}
    table = records_from_frame(engineered_records(counts, 100, 100))
    results = run_detection(table, alpha=0.01, out_dir=str(tmp_path))
    assert [r.test for r in results] == ["CBC", "BMP"]
    written = pl.read_csv(tmp_path / "ztests.csv")
    assert written["test"].to_list() == ["CBC", "BMP"]
    assert (tmp_path / "detect.json").exists()
