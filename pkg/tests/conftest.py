"""Shared fixtures for the gamma_observer test suite."""

import numpy as np
import pytest

from gamma_observer.core.domain import BoundaryRegion, DomainKind, DomainSpec, EdgePiece
from gamma_observer.core.sensing import SensorSpec
from gamma_observer.core.spectral import build_basis

IRRATIONAL_POINT = 1.0 / np.sqrt(2.0)


@pytest.fixture
def interval():
    return DomainSpec(DomainKind.INTERVAL, (1.0,), 1.0, 64)


@pytest.fixture
def rectangle():
    return DomainSpec(DomainKind.RECTANGLE, (1.0, 1.0), 1.0, 16)


@pytest.fixture
def interval_basis(interval):
    return build_basis(interval, 8)


@pytest.fixture
def rectangle_basis(rectangle):
    return build_basis(rectangle, 3)


@pytest.fixture
def left_end(interval):
    return BoundaryRegion.from_pieces(interval, [EdgePiece("left")], "gamma")


@pytest.fixture
def irrational_sensor():
    return SensorSpec.point(IRRATIONAL_POINT, name="b_irrational")


@pytest.fixture
def rectangle_nest(rectangle):
    """bottom[0, 0.5] ⊂ bottom ⊂ ∂Ω."""
    return (
        BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom", 0.0, 0.5)], "bottom_half"),
        BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom")], "bottom"),
        BoundaryRegion.full(rectangle),
    )
