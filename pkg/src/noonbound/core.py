"""Domain types shared by every module.

Conventions: mode 0 is the reference mode, the ``d`` unknown phases are
relative to it and live on modes ``1..d``. All bounds are per shot; divide by
``repetitions`` at the reporting layer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ScenarioError(ValueError):
    """Malformed scenario, loss profile, weight vector or phase vector."""


class UnidentifiablePhaseError(ValueError):
    """Some phase carries no information (zero weight or total loss on its mode)."""


class SingularModelError(ValueError):
    """The whole probe is lost, so the information matrix is identically zero."""


def default_phases(d: int) -> tuple[float, ...]:
    """Generic evaluation phases 0.3 + 0.2 j for j = 1..d."""
    return tuple(0.3 + 0.2 * j for j in range(1, d + 1))


def _as_float_tuple(values: Iterable[float], what: str) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{what}: non-numeric entry ({exc})") from None
    if not all(math.isfinite(v) for v in out):
        raise ScenarioError(f"{what}: entries must be finite")
    return out


@dataclass(frozen=True)
class LossProfile:
    gamma: tuple[float, ...]

    def __post_init__(self):
        g = _as_float_tuple(self.gamma, "loss")
        object.__setattr__(self, "gamma", g)
        if len(g) < 2:
            raise ScenarioError("loss profile needs at least two modes")
        for j, v in enumerate(g):
            if not 0.0 <= v <= 1.0:
                raise ScenarioError(f"loss rate out of range: gamma[{j}] = {v} not in [0, 1]")

    @classmethod
    def equal(cls, gamma: float, d: int) -> "LossProfile":
        return cls((gamma,) * (d + 1))

    @classmethod
    def split(cls, gamma_ref: float, gamma: float, d: int) -> "LossProfile":
        """Reference mode at ``gamma_ref``, all signal modes at ``gamma``."""
        return cls((gamma_ref,) + (gamma,) * d)

    @property
    def reference(self) -> float:
        return self.gamma[0]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=float)

    def __len__(self) -> int:
        return len(self.gamma)


@dataclass(frozen=True)
class WeightVector:
    """Probe weights p_0..p_d on the probability simplex (also used for coherent weights)."""

    p: tuple[float, ...]

    def __post_init__(self):
        p = _as_float_tuple(self.p, "weights")
        object.__setattr__(self, "p", p)
        if len(p) < 2:
            raise ScenarioError("weight vector needs at least two entries")
        if min(p) < 0.0:
            raise ScenarioError("weights must be non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ScenarioError(f"weights must sum to 1 (got {math.fsum(p)!r})")

    @classmethod
    def normalized(cls, raw: Iterable[float]) -> "WeightVector":
        """Project non-negative raw values onto the simplex by rescaling."""
        raw = np.asarray(list(raw), dtype=float)
        if raw.size < 2 or np.any(raw < 0) or not np.all(np.isfinite(raw)):
            raise ScenarioError("raw weights must be finite, non-negative, length >= 2")
        total = math.fsum(raw)
        if total <= 0.0:
            raise ScenarioError("raw weights are all zero")
        p = raw / total
        # push the rounding residue into the largest entry so fsum is exactly 1
        k = int(np.argmax(p))
        p[k] = 1.0 - math.fsum(np.delete(p, k))
        return cls(tuple(p))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)

    def __len__(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class PhaseVector:
    """Relative phases phi_j = phi~_j - phi~_0 in radians, j = 1..d. Never wrapped."""

    phi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_float_tuple(self.phi, "phases"))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.phi, dtype=float)

    def __len__(self) -> int:
        return len(self.phi)


@dataclass(frozen=True)
class FisherMatrix:
    entries: np.ndarray
    kind: str = "quantum"

    def __post_init__(self):
        if self.kind not in ("quantum", "classical"):
            raise ValueError(f"unknown Fisher matrix kind {self.kind!r}")
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Fisher matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-10):
            raise ValueError("Fisher matrix is not symmetric")
        m = 0.5 * (m + m.T)
        if m.size and np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("Fisher matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace_inverse(self) -> float:
        return float(np.trace(np.linalg.inv(self.entries)))


@dataclass(frozen=True)
class Scenario:
    n_photons: int
    n_phases: int
    loss: LossProfile
    phases: PhaseVector = None  # type: ignore[assignment]
    repetitions: int = 1

    def __post_init__(self):
        if not isinstance(self.loss, LossProfile):
            object.__setattr__(self, "loss", LossProfile(tuple(self.loss)))
        if self.phases is None:
            object.__setattr__(self, "phases", PhaseVector(default_phases(int(self.n_phases))))
        elif not isinstance(self.phases, PhaseVector):
            object.__setattr__(self, "phases", PhaseVector(tuple(self.phases)))

    @classmethod
    def make(cls, n_photons: int, gamma: Sequence[float], phases: Sequence[float] | None = None,
             repetitions: int = 1) -> "Scenario":
        """Build and validate a scenario, inferring d from the loss profile."""
        d = len(gamma) - 1
        s = cls(n_photons, d, LossProfile(tuple(gamma)),
                None if phases is None else PhaseVector(tuple(phases)), repetitions)
        return validate_scenario(s)

    @property
    def d(self) -> int:
        return self.n_phases

    @property
    def N(self) -> int:
        return self.n_photons

    def with_loss(self, gamma: Sequence[float]) -> "Scenario":
        return validate_scenario(Scenario(self.n_photons, self.n_phases, LossProfile(tuple(gamma)),
                                          self.phases, self.repetitions))

    def with_phases(self, phases: Sequence[float]) -> "Scenario":
        return validate_scenario(Scenario(self.n_photons, self.n_phases, self.loss,
                                          PhaseVector(tuple(phases)), self.repetitions))

    def to_dict(self) -> dict:
        return {
            "n_photons": self.n_photons,
            "n_phases": self.n_phases,
            "gamma": list(self.loss.gamma),
            "phases": list(self.phases.phi),
            "repetitions": self.repetitions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            n = data["n_photons"]
            d = data["n_phases"]
            gamma = data["gamma"]
        except KeyError as exc:
            raise ScenarioError(f"scenario is missing field {exc.args[0]!r}") from None
        phases = data.get("phases")
        s = cls(_as_int(n, "n_photons"), _as_int(d, "n_phases"), LossProfile(tuple(gamma)),
                None if phases is None else PhaseVector(tuple(phases)),
                _as_int(data.get("repetitions", 1), "repetitions"))
        return validate_scenario(s)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario JSON does not parse: {exc}") from None
        if not isinstance(data, dict):
            raise ScenarioError("scenario JSON must be an object")
        return cls.from_dict(data)


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ScenarioError(f"{what} must be an integer, got {value!r}")
    return int(value)


def validate_scenario(s: Scenario) -> Scenario:
    """Return ``s`` unchanged if every invariant holds, else raise ScenarioError."""
    if s.n_photons < 1:
        raise ScenarioError(f"photon number N must be >= 1, got {s.n_photons}")
    if s.n_phases < 1:
        raise ScenarioError(f"phase count d must be >= 1, got {s.n_phases}")
    if s.repetitions < 1:
        raise ScenarioError(f"repetitions must be >= 1, got {s.repetitions}")
    if len(s.loss) != s.n_phases + 1:
        raise ScenarioError(f"expected d+1={s.n_phases + 1} loss entries, got {len(s.loss)}")
    if len(s.phases) != s.n_phases:
        raise ScenarioError(f"expected d={s.n_phases} phases, got {len(s.phases)}")
    return s


def check_weights(s: Scenario, p: WeightVector) -> None:
    if len(p) != s.n_phases + 1:
        raise ScenarioError(f"expected d+1={s.n_phases + 1} weights, got {len(p)}")


def surviving_weights(s: Scenario, p: WeightVector) -> np.ndarray:
    """Per-mode weight of the N-photon component that survives loss, p_j (1 - gamma_j)^N."""
    check_weights(s, p)
    return p.array * (1.0 - s.loss.array) ** s.n_photons
