"""Scenario schemas for experiment configuration."""

from .scenario import (
    DomainConfig,
    ObservabilityConfig,
    ObserverConfig,
    PieceConfig,
    ReconstructionConfig,
    RegionConfig,
    Scenario,
    ScenarioConfig,
    SensorConfig,
    SimulationConfig,
)

__all__ = [
    "DomainConfig",
    "ObservabilityConfig",
    "ObserverConfig",
    "PieceConfig",
    "ReconstructionConfig",
    "RegionConfig",
    "Scenario",
    "ScenarioConfig",
    "SensorConfig",
    "SimulationConfig",
]
