import math

import pytest

from src.core.exceptions import UndefinedMetricError
from src.detect.hypothesis_tests import bonferroni, ks_two_sample, two_proportion_ztest

N0, N1 = 337630, 80293

# Published testing rates by group with the reported z statistics
LAB_TESTS = [
    ("CBC", 0.7371, 0.6820, 30.46),
    ("ABG", 0.1375, 0.1042, 27.10),
    ("BMP", 0.7126, 0.6372, 40.42),
]


@pytest.mark.parametrize("test, p0, p1, z", LAB_TESTS)
def test_reproduces_published_z(test, p0, p1, z):
    result = two_proportion_ztest(p0, N0, p1, N1, alpha=bonferroni(0.01, 4), test=test)
    assert result.z == pytest.approx(z, abs=0.1)
    assert result.p_value < 1e-100
    assert result.significant


def test_troponin_is_not_significant():
    result = two_proportion_ztest(0.0872, N0, 0.0858, N1, alpha=bonferroni(0.01, 4), test="Troponin T")
    assert result.z == pytest.approx(1.29, abs=0.05)
    assert result.p_value == pytest.approx(0.20, abs=0.02)
    assert not result.significant


def test_swapping_groups_negates_z():
    forward = two_proportion_ztest(0.3, 500, 0.25, 800)
    backward = two_proportion_ztest(0.25, 800, 0.3, 500)
    assert forward.z == pytest.approx(-backward.z)
    assert forward.p_value == pytest.approx(backward.p_value)


def test_degenerate_proportions():
    same = two_proportion_ztest(0.0, 10, 0.0, 20)
    assert (same.z, same.p_value) == (0.0, 1.0)
    apart = two_proportion_ztest(1.0, 10, 0.0, 20)
    assert apart.z == math.inf
    assert apart.p_value == 0.0


@pytest.mark.parametrize("args", [(0.5, 0, 0.5, 10), (1.2, 10, 0.5, 10), (0.5, 10, -0.1, 10)])
def test_rejects_bad_inputs(args):
    with pytest.raises(ValueError):
        two_proportion_ztest(*args)


def test_result_row_layout():
    row = two_proportion_ztest(0.5, 10, 0.4, 10, test="x").to_row()
    assert list(row)[:5] == ["test", "p0", "p1", "z", "p"]


def test_bonferroni():
    assert bonferroni(0.01, 9) == pytest.approx(1.11e-3, rel=1e-2)
    assert bonferroni(0.05, 5) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        bonferroni(0.05, 0)


def test_ks_statistic():
    statistic, _ = ks_two_sample([1, 2, 3], [1, 2, 4])
    assert statistic == pytest.approx(1 / 3)
    assert ks_two_sample([0.0, 1.0], [2.0, 3.0])[0] == 1.0
    assert ks_two_sample([5.0, 6.0], [5.0, 6.0]) == (0.0, 1.0)


def test_ks_empty_sample():
    with pytest.raises(UndefinedMetricError):
        ks_two_sample([], [1.0])
