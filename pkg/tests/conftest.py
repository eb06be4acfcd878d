import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def random_metric(rng, n, spread=1.0):
    L = rng.normal(size=(n, n))
    return L @ L.T / n + spread * np.eye(n)


def random_curvature(rng, n, scale=1.0):
    A = rng.normal(size=(n, n))
    return scale * (A - A.T) / 2


@st.composite
def problems(draw, dims=(2, 3, 4), scale=1.5):
    """(rng-free) random metric / curvature pair built from a drawn seed."""
    n = draw(st.sampled_from(dims))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    return random_metric(rng, n), random_curvature(rng, n, scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
