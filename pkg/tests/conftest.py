import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_schur(rng, d, rho=None):
    """Random real d×d matrix rescaled to spectral radius ``rho``."""
    a = rng.normal(size=(d, d))
    r = np.max(np.abs(np.linalg.eigvals(a)))
    target = rng.uniform(0.1, 0.95) if rho is None else rho
    return a * (target / r)


def random_spd(rng, d, cond=50.0):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    ev = np.exp(rng.uniform(0.0, np.log(cond), size=d))
    return (q * ev) @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
