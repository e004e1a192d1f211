"""Multi-start Nelder-Mead minimisation of the photon-counting CRB.

Two problems: the mesh alone for fixed probe weights, and the mesh jointly
with the weights (softmax-parameterised so iterates stay inside the simplex).
Restarts draw their starting meshes from independent child seeds, so results
do not depend on how many worker processes evaluate them.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import Scenario, WeightVector, check_weights, validate_scenario
from .interferometer import (
    MeshParams,
    _assemble,
    _distribution,
    _fim,
    _trace_inverse,
    canonicalize,
    clements_layout,
)

DEFAULT_RESTARTS = 32
MAX_EVALS = 5000
FATOL = 1e-10
WORKERS_ENV = "NOONBOUND_WORKERS"


class OptimizationFailed(RuntimeError):
    pass


@dataclass
class OptimizationResult:
    best_crb: float
    best_weights: WeightVector
    best_mesh: MeshParams
    restarts_used: int
    converged: bool
    history: list[tuple[int, float]] = field(default_factory=list)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - x.max())
    return z / z.sum()


class _Objective:
    """CRB as a function of flat parameters [thetas, chis, (weight logits)]; singular points map to +inf."""

    def __init__(self, s: Scenario, weights: np.ndarray | None):
        self.n = s.n_photons
        self.n_modes = s.n_phases + 1
        self.modes = clements_layout(self.n_modes)
        self.k = len(self.modes)
        self.transmit = (1.0 - s.loss.array) ** s.n_photons
        self.phi = s.phases.array
        self.weights = weights

    def split(self, x):
        th, ch = x[:self.k], x[self.k:2 * self.k]
        p = self.weights if self.weights is not None else _softmax(x[2 * self.k:])
        return th, ch, p

    def __call__(self, x) -> float:
        th, ch, p = self.split(x)
        u = _assemble(self.n_modes, self.modes, th, ch)
        dist = _distribution(self.n, p * self.transmit, self.phi, u)
        return _trace_inverse(_fim(dist.probabilities, dist.gradients))


def _run_restart(args) -> tuple[float, np.ndarray, bool, list[float]]:
    s, weights, joint, seed, max_evals = args
    obj = _Objective(s, weights)
    rng = np.random.default_rng(seed)
    x0 = np.concatenate([rng.uniform(0, np.pi / 2, obj.k), rng.uniform(0, 2 * np.pi, obj.k)])
    if joint:
        x0 = np.concatenate([x0, rng.normal(0.0, 0.5, s.n_phases + 1)])
    trace = []
    with np.errstate(invalid="ignore"):  # inf - inf in the simplex spread test on singular vertices
        res = minimize(obj, x0, method="Nelder-Mead",
                       callback=lambda xk: trace.append(obj(xk)),
                       options={"maxfev": max_evals, "fatol": FATOL, "xatol": np.inf, "adaptive": True})
    return float(res.fun), np.asarray(res.x), bool(res.status == 0), trace


def _multistart(s: Scenario, weights: np.ndarray | None, restarts: int, seed: int,
                max_evals: int, workers: int | None) -> OptimizationResult:
    validate_scenario(s)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    jobs = [(s, weights, weights is None, sq, max_evals) for sq in seeds]
    workers = default_workers() if workers is None else workers
    if workers > 1 and restarts > 1:
        with ProcessPoolExecutor(max_workers=min(workers, restarts)) as pool:
            runs = list(pool.map(_run_restart, jobs))
    else:
        runs = [_run_restart(j) for j in jobs]

    history, best_so_far, it = [], np.inf, 0
    for _, _, _, trace in runs:
        for val in trace:
            it += 1
            if val < best_so_far:
                best_so_far = val
                history.append((it, val))
    finite = [r for r in runs if np.isfinite(r[0])]
    if not finite:
        raise OptimizationFailed("every restart ended on a singular Fisher matrix; "
                                 "try different evaluation phases")
    best_val, best_x, ok, _ = min(finite, key=lambda r: r[0])
    obj = _Objective(s, weights)
    th, ch, p = obj.split(best_x)
    mesh = canonicalize(MeshParams(obj.n_modes, tuple(zip(obj.modes, th, ch))))
    return OptimizationResult(best_crb=best_val, best_weights=WeightVector.normalized(p), best_mesh=mesh,
                              restarts_used=restarts, converged=ok, history=history)


def optimize_mesh_for_state(s: Scenario, p: WeightVector, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                            max_evals: int = MAX_EVALS, workers: int | None = None) -> OptimizationResult:
    """Best mesh for fixed probe weights (the QCRB-optimal state in the usual call)."""
    check_weights(s, p)
    return _multistart(s, p.array, restarts, seed, max_evals, workers)


def optimize_joint(s: Scenario, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                   max_evals: int = MAX_EVALS, workers: int | None = None) -> OptimizationResult:
    """Best mesh and probe weights together."""
    return _multistart(s, None, restarts, seed, max_evals, workers)
