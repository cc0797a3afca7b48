import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from graphon_rd import GridFunction, StepGraphon

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_step_graphon(rng, n, density=1.0):
    """Symmetric nonnegative matrix rescaled so every degree is at most 1."""
    a = rng.random((n, n))
    a = (a + a.T) / 2
    if density < 1.0:
        keep = np.triu(rng.random((n, n)) < density, 1)
        a = a * (keep + keep.T)
    deg = a.sum(axis=1) / n
    return StepGraphon(a / max(1.0, deg.max()))


@st.composite
def step_graphons(draw, min_n=1, max_n=16):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_step_graphon(np.random.default_rng(seed), n)


@st.composite
def graphon_and_function(draw, min_n=1, max_n=32, scale=5.0):
    g = draw(step_graphons(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    u = np.random.default_rng(seed).uniform(-scale, scale, g.n)
    return g, GridFunction(u)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
