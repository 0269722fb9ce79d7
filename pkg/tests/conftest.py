import numpy as np
import pytest

from bergman_dpp.geometry import ModelGeometry


@pytest.fixture
def plane():
    return ModelGeometry.plane()


@pytest.fixture
def sphere():
    return ModelGeometry.projective_line()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_points(rng, n, radius=1.0):
    r = radius * np.sqrt(rng.uniform(size=n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))
