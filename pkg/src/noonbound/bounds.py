"""Closed-form precision bounds for weighted multi-mode NOON probes under loss.

The array helpers prefixed with ``_`` broadcast over leading axes so the
Monte-Carlo sweep can evaluate thousands of loss profiles at once; the public
functions take a :class:`~noonbound.core.Scenario`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (
    FisherMatrix,
    LossProfile,
    Scenario,
    ScenarioError,
    SingularModelError,
    UnidentifiablePhaseError,
    WeightVector,
    check_weights,
    surviving_weights,
    validate_scenario,
)

SCHEMES = ("optimal", "humphreys", "balanced")
Scheme = Union[str, WeightVector]


class DegenerateEnvironmentError(ValueError):
    """A mode is fully lossy, so no weight choice makes every phase identifiable."""


@dataclass(frozen=True)
class BoundReport:
    qcrb_noon: float
    sql_coherent: float
    advantage: float
    weights_used: WeightVector


# -- array kernels -----------------------------------------------------------

def _qcrb_arrays(n: int, gamma: np.ndarray, p: np.ndarray) -> np.ndarray:
    """(1/4N^2) (d / w_0 + sum_j 1/w_j) with w_j = p_j (1 - gamma_j)^N."""
    d = gamma.shape[-1] - 1
    w = p * (1.0 - gamma) ** n
    return (d / w[..., 0] + np.sum(1.0 / w[..., 1:], axis=-1)) / (4.0 * n * n)


def _optimal_weight_arrays(n: int, gamma: np.ndarray) -> np.ndarray:
    # p_j proportional to lambda_j^N with lambda_j = prod_{l != j} (1 - gamma_l)^(1/2),
    # rescaled by prod_l (1 - gamma_l)^(-N/2) to stay finite when a rate is close to 1
    d = gamma.shape[-1] - 1
    r = (1.0 - gamma) ** (-0.5 * n)
    r[..., 0] *= np.sqrt(d)
    return r / np.sum(r, axis=-1, keepdims=True)


def _min_qcrb_arrays(n: int, gamma: np.ndarray) -> np.ndarray:
    d = gamma.shape[-1] - 1
    t = np.sqrt(d) * (1.0 - gamma[..., 0]) ** (-0.5 * n) + np.sum((1.0 - gamma[..., 1:]) ** (-0.5 * n), axis=-1)
    return t * t / (4.0 * n * n)


def _sql_arrays(n: int, gamma: np.ndarray) -> np.ndarray:
    d = gamma.shape[-1] - 1
    t = np.sqrt(d / (1.0 - gamma[..., 0])) + np.sum(1.0 / np.sqrt(1.0 - gamma[..., 1:]), axis=-1)
    return t * t / (4.0 * n)


def _humphreys_arrays(d: int) -> np.ndarray:
    p = np.full(d + 1, 1.0 / (np.sqrt(d) + d))
    p[0] = np.sqrt(d) / (np.sqrt(d) + d)
    return p


# -- weight schemes ----------------------------------------------------------

def humphreys_weights(d: int) -> WeightVector:
    """The lossless optimum p_0 = sqrt(d)/(sqrt(d)+d), p_j = 1/(sqrt(d)+d)."""
    return WeightVector.normalized(_humphreys_arrays(d))


def balanced_weights(d: int) -> WeightVector:
    return WeightVector.normalized(np.ones(d + 1))


def optimal_weights(s: Scenario) -> WeightVector:
    """Loss-adapted weights minimising the NOON QCRB for the scenario's loss profile."""
    validate_scenario(s)
    gamma = s.loss.array
    if np.any(gamma >= 1.0):
        j = int(np.argmax(gamma >= 1.0))
        raise DegenerateEnvironmentError(f"mode {j} is fully lossy (gamma = 1); no optimal weights exist")
    return WeightVector.normalized(_optimal_weight_arrays(s.n_photons, gamma))


def coherent_optimal_weights(s: Scenario) -> WeightVector:
    """Optimal mean-photon split q_j for the coherent-state benchmark (the N = 1 weight form)."""
    gamma = s.loss.array
    if np.any(gamma >= 1.0):
        raise DegenerateEnvironmentError("a mode is fully lossy; no optimal coherent weights exist")
    return WeightVector.normalized(_optimal_weight_arrays(1, gamma))


def resolve_weights(s: Scenario, scheme: Scheme) -> WeightVector:
    """Expand a scheme name (``optimal``, ``humphreys``, ``balanced``) or pass a WeightVector through."""
    if isinstance(scheme, WeightVector):
        check_weights(s, scheme)
        return scheme
    if scheme == "optimal":
        return optimal_weights(s)
    if scheme == "humphreys":
        return humphreys_weights(s.n_phases)
    if scheme == "balanced":
        return balanced_weights(s.n_phases)
    raise ValueError(f"unknown weight scheme {scheme!r}; expected one of {SCHEMES} or a WeightVector")


# -- bounds ------------------------------------------------------------------

def _check_identifiable(s: Scenario, p: WeightVector) -> np.ndarray:
    w = surviving_weights(s, p)
    bad = np.flatnonzero(w <= 0.0)
    if bad.size:
        j = int(bad[0])
        why = "zero weight" if p.p[j] == 0.0 else "total loss"
        what = "the reference mode" if j == 0 else f"phase {j}"
        raise UnidentifiablePhaseError(f"mode {j} carries {why}; {what} cannot be estimated")
    return w


def qfim_noon(s: Scenario, p: WeightVector) -> FisherMatrix:
    """Quantum Fisher information matrix of the lossy weighted NOON probe.

    F[a, b] = 4 N^2 (w_a delta_ab - w_a w_b / W) over signal modes a, b = 1..d,
    with w_j = p_j (1 - gamma_j)^N and W = sum_j w_j. Phase independent.
    """
    validate_scenario(s)
    w = surviving_weights(s, p)
    total = w.sum()
    if total <= 0.0:
        raise SingularModelError("every mode is fully lost; the probe carries no phase information")
    ws = w[1:]
    f = 4.0 * s.n_photons ** 2 * (np.diag(ws) - np.outer(ws, ws) / total)
    return FisherMatrix(f, "quantum")


def qcrb_noon(s: Scenario, p: WeightVector) -> float:
    """Trace of the inverse QFIM, evaluated in closed form via the rank-one inverse update."""
    validate_scenario(s)
    _check_identifiable(s, p)
    return float(_qcrb_arrays(s.n_photons, s.loss.array, p.array))


def min_qcrb_noon(s: Scenario) -> float:
    """QCRB at the optimal weights, (1/4N^2) (sqrt(d)/(1-g_0)^{N/2} + sum_j 1/(1-g_j)^{N/2})^2."""
    optimal_weights(s)
    return float(_min_qcrb_arrays(s.n_photons, s.loss.array))


def sql_coherent(s: Scenario, q: Scheme = "optimal") -> float:
    """QCRB of weighted pure coherent probes with mean photon number N.

    With ``q="optimal"`` this is the standard quantum limit
    (1/4N) (sqrt(d/(1-g_0)) + sum_j 1/sqrt(1-g_j))^2; with explicit weights it
    is (1/4N) (d/(q_0 (1-g_0)) + sum_j 1/(q_j (1-g_j))).
    """
    validate_scenario(s)
    gamma = s.loss.array
    n = s.n_photons
    if isinstance(q, str):
        if q != "optimal":
            q = resolve_weights(s, q)
        else:
            if np.any(gamma >= 1.0):
                j = int(np.argmax(gamma >= 1.0))
                raise UnidentifiablePhaseError(f"mode {j} carries total loss; its phase cannot be estimated")
            return float(_sql_arrays(n, gamma))
    check_weights(s, q)
    u = q.array * (1.0 - gamma)
    bad = np.flatnonzero(u <= 0.0)
    if bad.size:
        raise UnidentifiablePhaseError(f"mode {int(bad[0])} carries no coherent amplitude after loss")
    return float((s.n_phases / u[0] + np.sum(1.0 / u[1:])) / (4.0 * n))


def quantum_advantage(s: Scenario, scheme: Scheme = "optimal") -> BoundReport:
    """r_QA = 1 - QCRB(NOON, scheme) / SQL; positive values beat the coherent benchmark."""
    p = resolve_weights(s, scheme)
    q = qcrb_noon(s, p)
    sql = sql_coherent(s, "optimal")
    return BoundReport(qcrb_noon=q, sql_coherent=sql, advantage=1.0 - q / sql, weights_used=p)


def advantage_split(n: int, d: int, gamma_ref: float, gamma: float, scheme: str = "optimal") -> float:
    """r_QA for a reference loss ``gamma_ref`` and common signal loss ``gamma``."""
    s = Scenario(n, d, LossProfile.split(gamma_ref, gamma, d))
    return quantum_advantage(validate_scenario(s), scheme).advantage


# -- critical loss -----------------------------------------------------------

CRIT_UPPER = 1.0 - 1e-9


def _advantage_curve(n: int, d: int, gamma_ref: float, gamma: np.ndarray, scheme: str) -> np.ndarray:
    g = np.empty(gamma.shape + (d + 1,))
    g[..., 0] = gamma_ref
    g[..., 1:] = gamma[..., None]
    sql = _sql_arrays(n, g)
    if scheme == "optimal":
        q = _min_qcrb_arrays(n, g)
    elif scheme == "humphreys":
        q = _qcrb_arrays(n, g, _humphreys_arrays(d))
    elif scheme == "balanced":
        q = _qcrb_arrays(n, g, np.full(d + 1, 1.0 / (d + 1)))
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    return 1.0 - q / sql


def critical_loss(n: int, d: int, gamma_ref: float, scheme: str = "optimal", tol: float = 1e-10) -> float:
    """Largest common signal-mode loss gamma at which r_QA stays non-negative.

    Returns 0 when there is no advantage even without signal loss. For N = 1
    the NOON and coherent bounds coincide (r_QA = 0 everywhere) and the upper
    end of the search bracket is returned.
    """
    if n < 1 or d < 1:
        raise ScenarioError("N and d must be >= 1")
    if not 0.0 <= gamma_ref < 1.0:
        raise ScenarioError(f"gamma_ref must lie in [0, 1), got {gamma_ref}")
    if n == 1:
        return CRIT_UPPER

    def f(x):
        return float(_advantage_curve(n, d, gamma_ref, np.asarray(x, dtype=float), scheme))

    if f(0.0) < 0.0:
        return 0.0
    grid = np.linspace(0.0, CRIT_UPPER, 101)
    vals = _advantage_curve(n, d, gamma_ref, grid, scheme)
    neg = np.flatnonzero(vals < 0.0)
    if neg.size == 0:
        return CRIT_UPPER
    # first sign change on the grid brackets the root; r_QA may be non-monotone
    # only through rounding near the root, so bisect inside that cell
    k = int(neg[0])
    lo, hi = grid[k - 1], grid[k]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
