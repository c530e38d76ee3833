import numpy as np
import pytest

from src.theory.boundaries import LinearBoundaries, check_parallel_boundaries, decision_boundaries_differ


def _boundaries(theta, theta_0, theta_1, b=(0.0, 0.0)):
    return LinearBoundaries(theta=np.array(theta), beta=-1.0, theta_a=(np.array(theta_0), np.array(theta_1)), b_a=b)


def test_scalar_multiples_are_parallel():
    verdict = check_parallel_boundaries(_boundaries([1.0, 2.0], [2.0, 4.0], [0.5, 1.0]))
    assert verdict.parallel
    assert verdict.deltas[0] == pytest.approx(2.0)
    assert verdict.deltas[1] == pytest.approx(0.5)


def test_opposite_direction_is_not_parallel():
    verdict = check_parallel_boundaries(_boundaries([1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]))
    assert not verdict.parallel
    assert verdict.group == 1


def test_tilted_boundary_is_not_parallel():
    verdict = check_parallel_boundaries(_boundaries([1.0, 0.0], [1.0, 0.5], [1.0, 0.0]))
    assert not verdict.parallel
    assert verdict.group == 0
    assert verdict.to_dict()["verdict"] == "not_parallel"


def test_zero_group_direction_is_not_parallel():
    assert not check_parallel_boundaries(_boundaries([1.0, 0.0], [0.0, 0.0], [1.0, 0.0])).parallel


def test_zero_censorship_direction_rejected():
    with pytest.raises(ValueError):
        _boundaries([0.0, 0.0], [1.0, 0.0], [1.0, 0.0])


def test_decision_boundaries_differ():
    assert not decision_boundaries_differ(_boundaries([1.0, 0.0], [1.0, 1.0], [2.0, 2.0], b=(1.0, 2.0)))
    assert decision_boundaries_differ(_boundaries([1.0, 0.0], [1.0, 1.0], [1.0, 1.0], b=(1.0, 2.0)))


def test_from_dict():
    lb = LinearBoundaries.from_dict({"theta": [1, 0], "beta": -5, "theta_a": [[2, 0], [3, 0]], "b_a": [0, 1]})
    assert check_parallel_boundaries(lb).parallel
    assert lb.b_a == (0.0, 1.0)
