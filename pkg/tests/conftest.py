import numpy as np
import pytest

from beamctl.semigroup import ModelParams
from beamctl.spectral import SpatialGrid


@pytest.fixture
def p8():
    return ModelParams(c=1.0, d=1.0, k=1.0, n_modes=8, T=1.0, r=0.3)


@pytest.fixture
def p4():
    return ModelParams(c=1.0, d=1.0, k=1.0, n_modes=4, T=1.0, r=0.25)


@pytest.fixture
def grid129():
    return SpatialGrid(129)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
