import math

import numpy as np
import pytest

from noonbound import bounds
from noonbound.core import Scenario, WeightVector
from noonbound.interferometer import MeasurementSingularError, MeshParams, crb_for
from noonbound.optimize import OptimizationFailed, optimize_joint, optimize_mesh_for_state

HALF = WeightVector((0.5, 0.5))


def grid_scan_mz(points=181):
    """Exhaustive scan of the single-block mesh for the lossless two-mode probe."""
    s = Scenario.make(1, [0, 0])
    best = math.inf
    for th in np.linspace(0, math.pi / 2, points):
        for ch in np.linspace(0, 2 * math.pi, 37):
            try:
                best = min(best, crb_for(s, HALF, MeshParams.clements(2, [th], [ch])))
            except MeasurementSingularError:
                pass
    return best


def test_single_photon_mesh_optimum_matches_grid_scan():
    res = optimize_mesh_for_state(Scenario.make(1, [0, 0]), HALF, restarts=4, seed=1)
    assert res.best_crb == pytest.approx(1.0, abs=1e-6)
    assert res.best_crb <= grid_scan_mz() + 1e-6
    assert res.best_mesh.is_canonical()
    assert res.best_weights.p == HALF.p


def test_single_photon_joint_reaches_qcrb():
    res = optimize_joint(Scenario.make(1, [0, 0]), restarts=4, seed=2)
    assert res.best_crb == pytest.approx(1.0, abs=1e-6)


def test_reference_loss_mesh_only_stays_above_qcrb():
    s = Scenario.make(2, [0.5, 0.2, 0.2])
    p = bounds.optimal_weights(s)
    res = optimize_mesh_for_state(s, p, restarts=4, seed=0, max_evals=2000)
    q = bounds.qcrb_noon(s, p)
    assert res.best_crb >= q - 1e-8
    assert res.best_crb > q
    assert crb_for(s, p, res.best_mesh) == pytest.approx(res.best_crb, rel=1e-9)


def test_more_restarts_never_hurt():
    s = Scenario.make(2, [0.5, 0.1, 0.3])
    p = bounds.optimal_weights(s)
    one = optimize_mesh_for_state(s, p, restarts=1, seed=5, max_evals=800)
    many = optimize_mesh_for_state(s, p, restarts=20, seed=5, max_evals=800)
    assert many.best_crb <= one.best_crb
    assert many.restarts_used == 20


@pytest.mark.parametrize("gamma", [[0.5, 0.1, 0.1], [0.3, 0.0, 0.4]])
def test_joint_not_worse_than_mesh_only(gamma):
    s = Scenario.make(2, gamma)
    p = bounds.optimal_weights(s)
    mesh_only = optimize_mesh_for_state(s, p, restarts=6, seed=3, max_evals=2000)
    joint = optimize_joint(s, restarts=6, seed=3, max_evals=2000)
    assert joint.best_crb <= mesh_only.best_crb + 1e-9
    assert joint.best_crb >= bounds.min_qcrb_noon(s) - 1e-8
    assert crb_for(s, joint.best_weights, joint.best_mesh) == pytest.approx(joint.best_crb, rel=1e-9)


def test_reproducible_with_seed():
    s = Scenario.make(2, [0.5, 0.1, 0.2])
    a = optimize_joint(s, restarts=3, seed=11, max_evals=500)
    b = optimize_joint(s, restarts=3, seed=11, max_evals=500)
    assert a.best_crb == b.best_crb
    assert a.best_mesh == b.best_mesh
    assert a.best_weights == b.best_weights
    assert a.history == b.history


def test_worker_count_does_not_change_result():
    s = Scenario.make(2, [0.5, 0.1, 0.2])
    a = optimize_joint(s, restarts=2, seed=4, max_evals=300, workers=1)
    b = optimize_joint(s, restarts=2, seed=4, max_evals=300, workers=2)
    assert a.best_crb == b.best_crb and a.best_mesh == b.best_mesh


def test_history_is_non_increasing():
    s = Scenario.make(2, [0.4, 0.1, 0.2])
    res = optimize_joint(s, restarts=3, seed=0, max_evals=600)
    vals = [v for _, v in res.history]
    iters = [i for i, _ in res.history]
    assert vals and all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(b > a for a, b in zip(iters, iters[1:]))
    assert vals[-1] == pytest.approx(res.best_crb)


def test_weights_on_simplex():
    res = optimize_joint(Scenario.make(2, [0.5, 0.0, 0.0]), restarts=2, seed=0, max_evals=500)
    assert sum(res.best_weights.p) == pytest.approx(1.0, abs=1e-12)
    assert min(res.best_weights.p) > 0


def test_invalid_restarts():
    with pytest.raises(ValueError):
        optimize_joint(Scenario.make(1, [0, 0]), restarts=0)


def test_all_singular_restarts_raise():
    # mode 1 is fully lost, so no mesh can see phi_1
    s = Scenario.make(2, [0.0, 1.0, 0.0])
    with pytest.raises(OptimizationFailed, match="different evaluation phases"):
        optimize_mesh_for_state(s, bounds.balanced_weights(2), restarts=2, seed=0, max_evals=100)
