import numpy as np
import pytest
from prefect.testing.utilities import prefect_test_harness

from src.core.rng import Rng
from src.core.types import Cohort, SimulationConfig
from src.harness.experiment import ExperimentSpec


@pytest.fixture(scope="session")
def prefect_harness():
    """Temporary Prefect backend for tests that run flows."""
    with prefect_test_harness():
        yield


@pytest.fixture
def rng():
    return Rng(12345)


@pytest.fixture
def setting2_config():
    return SimulationConfig(mu0=0.35, mu1=0.55, sigma2=0.1, tau0=5.0, tau1=7.0, c=0.05, b=5.0, d=10)


@pytest.fixture
def small_spec():
    """Two-cell Setting 2 sweep small enough to train in seconds."""
    return ExperimentSpec(
        name="small",
        setting=2,
        axes={"tau1": [5.0, 7.0]},
        base={"tau0": 5.0},
        realizations=2,
        n_train=200,
        n_test=600,
        master_seed=7,
    )


def make_cohort(scores, y, group, t=None, d=2, seed=0):
    """Scored cohort with uniform covariates; everyone tested unless t is given."""
    y = np.asarray(y)
    t = np.ones_like(y) if t is None else np.asarray(t)
    x = np.random.default_rng(seed).uniform(size=(len(y), d))
    return Cohort(group=np.asarray(group), x=x, y=y, t=t, y_obs=y * t, score=np.asarray(scores, dtype=float))


@pytest.fixture
def scored_cohort():
    return make_cohort
