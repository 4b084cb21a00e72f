import numpy as np
import pytest

from trigrasp import counters


@pytest.fixture(autouse=True)
def _fresh_counters():
    counters.reset()
    yield
    counters.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
