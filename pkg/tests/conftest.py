import numpy as np
import pytest

from meshcal.linalg import project_unitary


def random_unitary(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return project_unitary(g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
