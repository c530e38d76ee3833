import numpy as np
import pytest

from src.detect.threshold import (
    constant_rate_log_likelihood,
    default_tau_grid,
    estimate_threshold,
)


def test_default_grid_covers_scores():
    grid = default_tau_grid([0.4, 0.2, 0.4])
    np.testing.assert_allclose(grid, [-0.8, 0.2, 0.4])


def test_recovers_threshold_and_rate():
    rng = np.random.default_rng(0)
    scores = rng.uniform(size=20000)
    tested = np.where(scores > 0.6, 1, rng.binomial(1, 0.2, size=scores.size))
    estimate = estimate_threshold(scores, tested)
    assert estimate.tau_hat == pytest.approx(0.6, abs=0.01)
    assert estimate.c_hat == pytest.approx(0.2, abs=0.02)
    assert not estimate.boundary
    assert not estimate.poor_fit


def test_threshold_covers_every_untested_score():
    rng = np.random.default_rng(1)
    scores = rng.uniform(size=500)
    tested = np.where(scores > 0.3, 1, rng.binomial(1, 0.5, size=scores.size))
    estimate = estimate_threshold(scores, tested)
    assert estimate.tau_hat == scores[tested == 0].max()


def test_everyone_tested_lands_on_boundary():
    scores = np.linspace(0.0, 1.0, 50)
    with pytest.warns(UserWarning, match="grid boundary"):
        estimate = estimate_threshold(scores, np.ones(50, dtype=int))
    assert estimate.boundary
    assert estimate.tau_hat < scores.min()
    assert estimate.poor_fit


def test_constant_testing_is_a_poor_fit():
    scores = np.arange(100, dtype=float)
    tested = np.arange(100) % 2
    estimate = estimate_threshold(scores, tested)
    assert estimate.tau_hat == 98.0
    assert estimate.lr_p_value > 0.1
    assert estimate.poor_fit


def test_ties_break_toward_smaller_threshold():
    estimate = estimate_threshold([0.0, 0.0, 1.0, 2.0], [0, 1, 1, 1], tau_grid=[-1.0, 0.0, 0.5, 3.0])
    assert estimate.tau_hat == 0.0
    assert estimate.c_hat == pytest.approx(0.5)


def test_constant_rate_likelihood():
    assert constant_rate_log_likelihood([1, 1, 1]) == 0.0
    assert constant_rate_log_likelihood([0, 1]) == pytest.approx(2 * np.log(0.5))


@pytest.mark.parametrize(
    "scores, tested, kwargs",
    [
        ([0.1, 0.2], [1], {}),
        ([], [], {}),
        ([0.1], [2], {}),
        ([0.1], [1], {"c_grid": [0.5, 1.5]}),
    ],
)
def test_rejects_bad_inputs(scores, tested, kwargs):
    with pytest.raises(ValueError):
        estimate_threshold(scores, tested, **kwargs)
