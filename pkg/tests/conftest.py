import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def semi_orthogonal(d, c=1.0, seed=0):
    """d x d matrix with X^T X = c^2 I and every row of norm c."""
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, d)))
    return c * q


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
