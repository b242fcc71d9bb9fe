"""Numerical core: domains, spectral operators, sensing, observability, observer, reconstruction."""

from .domain import BoundaryRegion, DomainKind, DomainSpec, EdgePiece, InflatedRegion, inflate_region
from .error_handler import (
    ErrorHandler,
    ErrorType,
    GammaObserverError,
    DomainError,
    NumericalError,
    InvariantViolation,
)
from .spectral import (
    BoundaryField,
    ControlSignal,
    SpectralBasis,
    StateField,
    StateTrajectory,
    build_basis,
)
from .sensing import OutputTrajectory, SensorKind, SensorSpec, WeightProfile
from .observability import GramianReport, ObservabilityProblem
from .observer import DecayFit, ObserverSystem
from .reconstruction import ErrorReport, ObservableSet, ReconstructionProblem

__all__ = [
    "BoundaryRegion",
    "DomainKind",
    "DomainSpec",
    "EdgePiece",
    "InflatedRegion",
    "inflate_region",
    "ErrorHandler",
    "ErrorType",
    "GammaObserverError",
    "DomainError",
    "NumericalError",
    "InvariantViolation",
    "BoundaryField",
    "ControlSignal",
    "SpectralBasis",
    "StateField",
    "StateTrajectory",
    "build_basis",
    "OutputTrajectory",
    "SensorKind",
    "SensorSpec",
    "WeightProfile",
    "GramianReport",
    "ObservabilityProblem",
    "DecayFit",
    "ObserverSystem",
    "ErrorReport",
    "ObservableSet",
    "ReconstructionProblem",
]
