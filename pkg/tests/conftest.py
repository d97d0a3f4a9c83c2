import numpy as np
import pytest

from activescan.core import Grid
from activescan.schedule import make_cosine_schedule


@pytest.fixture(scope="session")
def schedule500():
    return make_cosine_schedule(500)


@pytest.fixture
def grid4():
    return Grid(kind="cartesian2d", n_ax=4, n_lat=4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
