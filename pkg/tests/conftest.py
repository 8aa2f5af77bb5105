import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from unimoment.measures import Distribution, OrderParameter
from unimoment.oracle import random_distributions

settings.register_profile(
    "default", deadline=None, max_examples=150,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_collection_modifyitems(items):
    # ground-truth oracles are checked before anything that relies on them
    items.sort(key=lambda item: 0 if item.fspath.basename == "test_oracle.py" else 1)


@pytest.fixture(scope="session")
def corpus():
    return random_distributions(500, max_size=16, seed=2024)


@pytest.fixture(scope="session")
def small_corpus():
    return random_distributions(50, max_size=6, seed=77)


@st.composite
def distributions(draw, min_size=1, max_size=8, min_prob=1e-4):
    m = draw(st.integers(min_size, max_size))
    w = draw(st.lists(st.floats(min_prob, 1.0), min_size=m, max_size=m))
    probs = np.asarray(w) / np.sum(w)
    return Distribution.from_probs(probs)


@st.composite
def distribution_pairs(draw, min_size=1, max_size=8):
    p = draw(distributions(min_size, max_size))
    w = draw(st.lists(st.floats(1e-4, 1.0), min_size=p.size, max_size=p.size))
    q = Distribution.from_probs(np.asarray(w) / np.sum(w))
    return p, q


def nonzero_orders():
    neg = st.floats(-0.95, -0.05)
    pos = st.floats(0.05, 5.0)
    return st.one_of(neg, pos).map(OrderParameter.from_rho)
