import numpy as np
import pytest

from src.core.rng import SOLVER_STREAM, TEST_STREAM, TRAIN_STREAM, Rng, derive_realization_seed, splitmix64


def test_realization_seed_is_pure():
    assert derive_realization_seed(42, 5) == derive_realization_seed(42, 5)


def test_realization_seeds_are_distinct():
    seeds = {derive_realization_seed(42, i) for i in range(10_000)}
    assert len(seeds) == 10_000


def test_realization_seed_depends_on_master():
    assert derive_realization_seed(0, 3) != derive_realization_seed(1, 3)


def test_realization_seed_fits_64_bits():
    for i in (0, 1, 2**32 - 1):
        assert 0 <= derive_realization_seed(2**64 - 1, i) < 2**64


def test_negative_realization_index_rejected():
    with pytest.raises(ValueError):
        derive_realization_seed(0, -1)


def test_splitmix64_zero_is_fixed_point():
    assert splitmix64(0) == 0


def test_same_seed_same_draws():
    a = Rng(99).normal(100)
    b = Rng(99).normal(100)
    np.testing.assert_array_equal(a, b)


def test_streams_are_independent_of_each_other():
    base = Rng(99)
    train_first = base.stream(TRAIN_STREAM).normal(50)
    # Consuming the test stream does not move the train stream
    base.stream(TEST_STREAM).normal(1000)
    np.testing.assert_array_equal(train_first, Rng(99).stream(TRAIN_STREAM).normal(50))
    assert not np.array_equal(train_first, Rng(99).stream(SOLVER_STREAM).normal(50))


def test_rng_rejects_bad_seed():
    with pytest.raises(ValueError):
        Rng(-1)
    with pytest.raises(ValueError):
        Rng(2**64)
