"""
Gamma Observer - regional boundary observation of parabolic systems.

This package simulates a heat-type system with Neumann boundary conditions,
decides whether the trace of its state on a boundary region can be recovered
from sensor outputs, runs the identity observer on that region and
reconstructs initial states by regularized least squares.
"""

__version__ = "0.1.0"
__author__ = "Gamma Observer Team"

from .core.domain import BoundaryRegion, DomainSpec
from .core.spectral import StateField, build_basis
from .schemas.scenario import ScenarioConfig

__all__ = ["BoundaryRegion", "DomainSpec", "StateField", "build_basis", "ScenarioConfig"]
