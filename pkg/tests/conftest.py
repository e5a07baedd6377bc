import numpy as np
import pytest

from gwlab.grid import Grid
from gwlab.fields import LieAlgebraField


@pytest.fixture
def grid2():
    return Grid(2, 16, M=8, T=1.0)


@pytest.fixture
def grid3():
    return Grid(3, 8, M=8, T=0.5)


@pytest.fixture
def grid4():
    return Grid(4, 16, M=4, T=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid, rng, scale=1.0):
    return LieAlgebraField(grid, scale * rng.standard_normal((3,) + grid.shape))
