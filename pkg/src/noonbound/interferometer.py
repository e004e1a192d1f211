"""Photon counting behind a multi-mode beam-splitter mesh.

Mesh convention: each block acts on adjacent modes (m, m+1) as
``T(theta, chi) = [[e^{i chi} cos theta, -sin theta], [e^{i chi} sin theta, cos theta]]``;
U is the product V_K ... V_1 of the listed blocks. Creation operators
transform as a_j^+ -> sum_k conj(U[j, k]) a_k^+, so rows index input modes and
columns index detectors. Column phases (U -> U D) never change photon-count
statistics and are dropped; row phases (U -> D U) act like shifts of the
encoded phases.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from math import lgamma

import numpy as np

from .core import FisherMatrix, Scenario, WeightVector, check_weights, surviving_weights, validate_scenario

P_SKIP = 1e-12
COND_MAX = 1e12
EV_FLOOR = 1e-15  # below this the largest FIM eigenvalue is rounding noise


class MeasurementSingularError(ValueError):
    """The classical FIM is singular: the measurement cannot identify all phases."""


@dataclass(frozen=True)
class MeshParams:
    n_modes: int
    layers: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        layers = tuple((int(m), float(t), float(c)) for m, t, c in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.n_modes < 2:
            raise ValueError("a mesh needs at least two modes")
        for m, _, _ in layers:
            if not 0 <= m <= self.n_modes - 2:
                raise ValueError(f"block mode index {m} outside [0, {self.n_modes - 2}]")

    @classmethod
    def clements(cls, n_modes: int, thetas, chis) -> "MeshParams":
        modes = clements_layout(n_modes)
        thetas, chis = np.asarray(thetas, dtype=float), np.asarray(chis, dtype=float)
        if thetas.shape != (len(modes),) or chis.shape != (len(modes),):
            raise ValueError(f"a {n_modes}-mode rectangular mesh has {len(modes)} blocks")
        return cls(n_modes, tuple(zip(modes, thetas, chis)))

    @classmethod
    def identity(cls, n_modes: int) -> "MeshParams":
        k = len(clements_layout(n_modes))
        return cls.clements(n_modes, np.zeros(k), np.zeros(k))

    @classmethod
    def random(cls, n_modes: int, rng: np.random.Generator) -> "MeshParams":
        k = len(clements_layout(n_modes))
        return cls.clements(n_modes, rng.uniform(0, np.pi / 2, k), rng.uniform(0, 2 * np.pi, k))

    @property
    def thetas(self) -> np.ndarray:
        return np.array([t for _, t, _ in self.layers])

    @property
    def chis(self) -> np.ndarray:
        return np.array([c for _, _, c in self.layers])

    def is_canonical(self) -> bool:
        return all(0.0 <= t < 2 * np.pi and 0.0 <= c < 2 * np.pi for _, t, c in self.layers)

    def to_dict(self) -> dict:
        return {"layers": [{"mode": m, "theta": t, "chi": c} for m, t, c in self.layers]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, n_modes: int | None = None) -> "MeshParams":
        layers = tuple((e["mode"], e["theta"], e["chi"]) for e in data["layers"])
        if n_modes is None:
            n_modes = data.get("n_modes") or (max((m for m, _, _ in layers), default=0) + 2)
        return cls(n_modes, layers)

    @classmethod
    def from_json(cls, text: str, n_modes: int | None = None) -> "MeshParams":
        return cls.from_dict(json.loads(text), n_modes)


@lru_cache(maxsize=None)
def clements_layout(n_modes: int) -> tuple[int, ...]:
    """Upper mode index of each block in a rectangular mesh: n columns alternating even/odd pairs."""
    return tuple(m for col in range(n_modes) for m in range(col % 2, n_modes - 1, 2))


def block(theta: float, chi: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * chi)
    return np.array([[e * c, -s], [e * s, c]])


def _assemble(n_modes: int, modes, thetas, chis) -> np.ndarray:
    # plain complex arithmetic: numpy per-row overhead dominates at these sizes
    u = [[1.0 + 0j if r == c else 0j for c in range(n_modes)] for r in range(n_modes)]
    for m, th, ch in zip(modes, thetas, chis):
        c, s = math.cos(th), math.sin(th)
        ec = cmath.exp(1j * ch) * c
        es = cmath.exp(1j * ch) * s
        top, bot = u[m], u[m + 1]
        u[m] = [ec * a - s * b for a, b in zip(top, bot)]
        u[m + 1] = [es * a + c * b for a, b in zip(top, bot)]
    return np.array(u)


def assemble_unitary(mesh: MeshParams) -> np.ndarray:
    """Scattering matrix U = V_K ... V_2 V_1 of the listed blocks."""
    modes = [m for m, _, _ in mesh.layers]
    return _assemble(mesh.n_modes, modes, mesh.thetas, mesh.chis)


def canonicalize(mesh: MeshParams) -> MeshParams:
    """Wrap every block angle into [0, 2 pi); U is unchanged.

    Tighter theta ranges are not statistics-preserving here: T(theta + pi) and
    T(pi - theta) differ from T(theta) by signs on single rows of the embedded
    block, which end up as input phases of pi and alter odd-N statistics.
    """
    two_pi = 2 * np.pi
    out = []
    for m, theta, chi in mesh.layers:
        theta, chi = theta % two_pi, chi % two_pi
        # x % 2pi can round up to 2pi itself for tiny negative x
        out.append((m, 0.0 if theta >= two_pi else theta, 0.0 if chi >= two_pi else chi))
    return MeshParams(mesh.n_modes, tuple(out))


@lru_cache(maxsize=None)
def outcome_tuples(n_photons: int, n_modes: int) -> np.ndarray:
    """All occupation tuples with total exactly N, in lexicographic order."""
    rows = [t for t in itertools.product(range(n_photons + 1), repeat=n_modes) if sum(t) == n_photons]
    out = np.array(rows, dtype=int)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _multinomial_root(n_photons: int, n_modes: int) -> np.ndarray:
    l = outcome_tuples(n_photons, n_modes)
    logc = lgamma(n_photons + 1) - np.sum([[lgamma(x + 1) for x in row] for row in l], axis=1)
    return np.exp(0.5 * logc)


@dataclass(frozen=True)
class OutcomeDistribution:
    outcomes: np.ndarray       # (n_out, d+1) photon counts, all with total N
    probabilities: np.ndarray  # (n_out,)
    gradients: np.ndarray      # (n_out, d) dP/dphi_j
    residual_mass: float       # probability of losing at least one photon

    @property
    def entries(self) -> dict[tuple[int, ...], tuple[float, np.ndarray]]:
        return {tuple(int(x) for x in l): (float(pr), g)
                for l, pr, g in zip(self.outcomes, self.probabilities, self.gradients)}

    def __getitem__(self, outcome) -> float:
        return self.entries[tuple(outcome)][0]


def _amplitudes(n: int, coeff: np.ndarray, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode amplitude columns M[j, l] = sqrt(N!/prod l!) prod_k conj(U[j,k])^{l_k}."""
    n_modes = U.shape[0]
    l = outcome_tuples(n, n_modes)
    m = np.prod(U.conj()[:, None, :] ** l[None, :, :], axis=2) * _multinomial_root(n, n_modes)
    return m, coeff[:, None] * m


def _distribution(n: int, w: np.ndarray, phi: np.ndarray, U: np.ndarray) -> OutcomeDistribution:
    coeff = np.sqrt(w) * np.exp(1j * n * np.concatenate([[0.0], phi]))
    _, terms = _amplitudes(n, coeff, U)
    amp = terms.sum(axis=0)
    prob = np.abs(amp) ** 2
    # d amp / d phi_a = i N * (mode-a term)
    grad = 2.0 * np.real(np.conj(amp)[:, None] * (1j * n) * terms[1:].T)
    return OutcomeDistribution(outcome_tuples(n, U.shape[0]), prob, grad, float(1.0 - w.sum()))


def outcome_distribution(s: Scenario, p: WeightVector, U: np.ndarray) -> OutcomeDistribution:
    """N-photon counting statistics of the lossy probe behind scattering matrix U, with phase gradients."""
    validate_scenario(s)
    check_weights(s, p)
    U = np.asarray(U, dtype=complex)
    if U.shape != (s.n_phases + 1, s.n_phases + 1):
        raise ValueError(f"scattering matrix must be {s.n_phases + 1}x{s.n_phases + 1}")
    return _distribution(s.n_photons, surviving_weights(s, p), s.phases.array, U)


def _fim(prob: np.ndarray, grad: np.ndarray) -> np.ndarray:
    keep = prob >= P_SKIP
    g = grad[keep]
    return (g / prob[keep, None]).T @ g


def classical_fim(dist: OutcomeDistribution) -> FisherMatrix:
    """F_C[j, k] = sum_l (dP_l/dphi_j)(dP_l/dphi_k) / P_l over N-photon outcomes with P_l >= 1e-12.

    Outcomes with lost photons have phase-independent probability and add nothing.
    """
    f = _fim(dist.probabilities, dist.gradients)
    return FisherMatrix(0.5 * (f + f.T), "classical")


def _trace_inverse(f: np.ndarray) -> float:
    """Tr f^{-1} for a symmetric PSD matrix; inf when f is numerically zero or cond(f) > COND_MAX."""
    if not np.all(np.isfinite(f)):
        return math.inf
    ev = np.linalg.eigvalsh(f)
    if ev[-1] <= EV_FLOOR or ev[0] * COND_MAX < ev[-1]:
        return math.inf
    return float(np.sum(1.0 / ev))


def crb(dist: OutcomeDistribution) -> float:
    """Cramer-Rao bound Tr F_C^{-1} per shot."""
    value = _trace_inverse(classical_fim(dist).entries)
    if not math.isfinite(value):
        raise MeasurementSingularError("measurement cannot identify all phases (singular classical FIM)")
    return value


def crb_for(s: Scenario, p: WeightVector, mesh: MeshParams) -> float:
    return crb(outcome_distribution(s, p, assemble_unitary(mesh)))
