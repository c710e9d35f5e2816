import numpy as np
import pytest

from pinchbeam.channel import sample_users
from pinchbeam.config import ScenarioConfig
from pinchbeam.optimizer import init_layout


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    return ScenarioConfig(N_s=400)


@pytest.fixture
def instance(small_config, rng):
    users = sample_users(small_config, rng)
    layout = init_layout(small_config, rng)
    return small_config, users, layout
