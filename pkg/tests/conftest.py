from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from freeprob.measures import AtomicMeasure

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

rationals = st.fractions(min_value=-2, max_value=2, max_denominator=7)


@st.composite
def rational_moments(draw, K):
    return tuple(draw(rationals) for _ in range(K))


@st.composite
def atomic_measures(draw, max_atoms=4):
    n = draw(st.integers(1, max_atoms))
    xs = draw(st.lists(st.integers(-8, 8), min_size=n, max_size=n, unique=True))
    ws = draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    total = sum(ws)
    return AtomicMeasure([x / 4 for x in xs], [w / total for w in ws])


@pytest.fixture
def bernoulli():
    return AtomicMeasure.bernoulli(0.5, 0.0, 1.0)


@pytest.fixture
def half():
    return Fraction(1, 2)


def random_circle_moments(rng, K):
    # moments of a random atomic measure on the unit circle
    n = rng.integers(1, 5)
    ang = rng.uniform(-np.pi, np.pi, n)
    w = rng.dirichlet(np.ones(n))
    return ang, w


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
