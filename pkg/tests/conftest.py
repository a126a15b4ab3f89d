import numpy as np
import pytest

from hypmaps.geometry import build_grid


@pytest.fixture(scope="session")
def grid400():
    return build_grid(20.0, 400)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
