import numpy as np
import pytest

from oridist import grid as gridmod


@pytest.fixture(scope="session")
def grid_l0():
    return gridmod.build_grid(0)


@pytest.fixture(scope="session")
def grid_l1():
    return gridmod.build_grid(1)


@pytest.fixture(scope="session")
def grid_l2():
    return gridmod.build_grid(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
