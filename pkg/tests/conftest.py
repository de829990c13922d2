import numpy as np
import pytest

from snkeig.problems import get_problem
from snkeig.sweep import default_quadrature


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def problem(name):
    model = get_problem(name)
    return model, default_quadrature(model)


def aligned_distance(x, y):
    """Relative L2 distance between two vectors after unit scaling and sign alignment."""
    x = np.asarray(x, dtype=float) / np.linalg.norm(x)
    y = np.asarray(y, dtype=float) / np.linalg.norm(y)
    return float(min(np.linalg.norm(x - y), np.linalg.norm(x + y)))
