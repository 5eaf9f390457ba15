import numpy as np
import pytest

from relunmd.model import build_observed, update_slack
from relunmd.io import synth_relu


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_obs():
    m, _, _ = synth_relu(20, 15, 4, seed=5)
    return build_observed(m)


@pytest.fixture
def small_slack(small_obs, rng):
    x = rng.standard_normal(small_obs.shape)
    return update_slack(x, small_obs)
