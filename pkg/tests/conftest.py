import numpy as np
import pytest

from fnsc.frame import build_frame
from fnsc.grid import FrequencyGrid


@pytest.fixture(scope="session")
def grid8():
    return FrequencyGrid(8)


@pytest.fixture(scope="session")
def grid16():
    return FrequencyGrid(16)


@pytest.fixture(scope="session")
def grid32():
    return FrequencyGrid(32)


@pytest.fixture(scope="session")
def frame8(grid8):
    return build_frame(grid8)


@pytest.fixture(scope="session")
def frame16(grid16):
    return build_frame(grid16)


@pytest.fixture(scope="session")
def frame32(grid32):
    return build_frame(grid32)


@pytest.fixture()
def rng():
    return np.random.default_rng(424242)
