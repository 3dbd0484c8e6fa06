from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hyperlab.asymptotic import FreeFieldSetup
from hyperlab.freefield import FockBasis, ModeGrid

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid():
    return ModeGrid(1.0, 0.25, 0.75)


@pytest.fixture(scope="session")
def basis(grid):
    return FockBasis(grid, 2)


@pytest.fixture(scope="session")
def setup():
    return FreeFieldSetup()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
