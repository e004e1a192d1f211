import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noonbound.core import (
    FisherMatrix,
    LossProfile,
    PhaseVector,
    Scenario,
    ScenarioError,
    WeightVector,
    default_phases,
    validate_scenario,
)


def test_valid_scenario_passes_through():
    s = Scenario(2, 2, LossProfile((0.5, 0.0, 0.0)), PhaseVector((0.1, 0.2)))
    assert validate_scenario(s) is s


def test_loss_out_of_range():
    with pytest.raises(ScenarioError, match="loss rate out of range"):
        Scenario.make(2, [1.2, 0.0, 0.0])


def test_loss_length_mismatch():
    with pytest.raises(ScenarioError, match=r"expected d\+1=3 loss entries"):
        validate_scenario(Scenario(2, 2, LossProfile((0.1, 0.2)), PhaseVector((0.1, 0.2))))


@pytest.mark.parametrize("n, d", [(0, 2), (2, 0), (-1, 1)])
def test_counts_must_be_positive(n, d):
    with pytest.raises(ScenarioError):
        validate_scenario(Scenario(n, d, LossProfile((0.0,) * (max(d, 1) + 1)), PhaseVector((0.0,) * max(d, 1))))


def test_phase_count_mismatch():
    with pytest.raises(ScenarioError, match="expected d=2 phases"):
        Scenario.make(1, [0, 0, 0], phases=[0.1])


def test_default_phases_are_generic():
    assert default_phases(3) == pytest.approx((0.5, 0.7, 0.9))
    assert Scenario.make(2, [0, 0, 0]).phases.phi == pytest.approx((0.5, 0.7))


@given(st.integers(1, 6), st.integers(1, 5), st.data())
def test_json_round_trip(n, d, data):
    gamma = data.draw(st.lists(st.floats(0, 1), min_size=d + 1, max_size=d + 1))
    phases = data.draw(st.lists(st.floats(-10, 10), min_size=d, max_size=d))
    mu = data.draw(st.integers(1, 1000))
    s = Scenario.make(n, gamma, phases, mu)
    text = s.to_json()
    back = Scenario.from_json(text)
    assert back == s
    assert back.to_json() == text


def test_json_schema_keys():
    s = Scenario.make(2, [0.5, 0.0, 0.0])
    assert set(json.loads(s.to_json())) == {"n_photons", "n_phases", "gamma", "phases", "repetitions"}


def test_from_json_rejects_missing_field():
    with pytest.raises(ScenarioError, match="gamma"):
        Scenario.from_json('{"n_photons": 2, "n_phases": 1}')


@given(st.lists(st.floats(0.0, 1e6), min_size=2, max_size=12).filter(lambda v: sum(v) > 0))
def test_weight_normalisation_lands_on_simplex(raw):
    w = WeightVector.normalized(raw)
    assert abs(sum(w.p) - 1.0) <= 1e-12
    assert min(w.p) >= 0.0


def test_weight_vector_rejects_off_simplex():
    with pytest.raises(ScenarioError):
        WeightVector((0.5, 0.6))
    with pytest.raises(ScenarioError):
        WeightVector((1.5, -0.5))


def test_fisher_matrix_invariants():
    FisherMatrix(np.eye(2), "classical")
    with pytest.raises(ValueError, match="symmetric"):
        FisherMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="semidefinite"):
        FisherMatrix(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        FisherMatrix(np.eye(2), "other")


def test_value_objects_are_immutable():
    s = Scenario.make(1, [0, 0])
    with pytest.raises(AttributeError):
        s.n_photons = 3
    f = FisherMatrix(np.eye(2))
    with pytest.raises(ValueError):
        f.entries[0, 0] = 2.0
