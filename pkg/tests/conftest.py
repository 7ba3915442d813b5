import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from smallworld.grid import GridSpec

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def small_grids(draw, max_n=64, dims=(1, 2, 3)):
    d = draw(st.sampled_from(dims))
    top = int(round(max_n ** (1 / d)))
    while top ** d > max_n:
        top -= 1
    if top < 3:
        d, top = 1, max_n
    m = draw(st.integers(3, top))
    return GridSpec(d, m)


@st.composite
def grid_and_links(draw, max_n=64):
    g = draw(small_grids(max_n))
    v = draw(st.integers(0, g.population - 1))
    others = [u for u in range(g.population) if u != v]
    links = draw(st.lists(st.sampled_from(others), unique=True, max_size=min(10, len(others))))
    return g, v, sorted(links)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
