"""Precision bounds for multiple-phase estimation with weighted multi-mode NOON states under photon loss."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FisherMatrix,
    LossProfile,
    PhaseVector,
    Scenario,
    ScenarioError,
    SingularModelError,
    UnidentifiablePhaseError,
    WeightVector,
    validate_scenario,
)

__all__ = [
    "FisherMatrix",
    "LossProfile",
    "PhaseVector",
    "Scenario",
    "ScenarioError",
    "SingularModelError",
    "UnidentifiablePhaseError",
    "WeightVector",
    "validate_scenario",
]
