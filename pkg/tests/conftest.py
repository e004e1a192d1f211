import numpy as np
import pytest
from hypothesis import strategies as st

from noonbound.core import LossProfile, Scenario, WeightVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_scenario(rng, n_max=3, d_max=3, gamma_max=0.9, n_min=1, d_min=1):
    n = int(rng.integers(n_min, n_max + 1))
    d = int(rng.integers(d_min, d_max + 1))
    s = Scenario(n, d, LossProfile(tuple(rng.uniform(0.0, gamma_max, d + 1))),
                 phases=tuple(rng.uniform(-np.pi, np.pi, d)))
    p = WeightVector.normalized(rng.dirichlet(np.ones(d + 1)))
    return s, p


@st.composite
def scenarios(draw, n_max=3, d_max=4, gamma_max=0.9):
    n = draw(st.integers(1, n_max))
    d = draw(st.integers(1, d_max))
    gamma = draw(st.lists(st.floats(0.0, gamma_max), min_size=d + 1, max_size=d + 1))
    return Scenario(n, d, LossProfile(tuple(gamma)))


@st.composite
def scenario_and_weights(draw, n_max=3, d_max=4, gamma_max=0.9):
    s = draw(scenarios(n_max, d_max, gamma_max))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=s.d + 1, max_size=s.d + 1))
    return s, WeightVector.normalized(raw)


ACCEPTANCE_LINES: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
