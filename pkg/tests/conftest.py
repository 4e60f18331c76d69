import numpy as np
import pytest

from pulseforge.noise import brisbane_device


@pytest.fixture(scope="session")
def dev():
    return brisbane_device()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
