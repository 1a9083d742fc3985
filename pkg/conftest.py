"""Shared pytest fixtures"""

import numpy as np
import pytest

from binoether.core.fieldkit import Grid
from binoether.services.calibration_cache import get_calibration_cache


@pytest.fixture
def rng():
    """Seeded generator so every test sees the same random states"""
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return Grid(L=40.0, N=256)


@pytest.fixture(scope="session")
def toda_calibration():
    return get_calibration_cache().toda(n=3, states=10, seed=0)
