"""Output map C: pointwise and zone sensors, in the interior or on the boundary."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import DomainKind, DomainSpec, EdgePiece
from .error_handler import DomainError, GridMismatchError
from .spectral import SpectralBasis, StateField, uniform_time_grid

logger = logging.getLogger(__name__)


class SensorKind(str, Enum):
    """Sensor geometries."""
    INTERIOR_POINTWISE = "interior_pointwise"
    INTERIOR_ZONE = "interior_zone"
    BOUNDARY_POINTWISE = "boundary_pointwise"
    BOUNDARY_ZONE = "boundary_zone"


class WeightProfile(str, Enum):
    """Spatial weight of a zone sensor."""
    UNIFORM = "uniform"


@dataclass(frozen=True)
class SensorSpec:
    """One output channel.

    Pointwise kinds use ``location``; interior zones use ``support`` (one
    ``(a, b)`` interval per axis); boundary zones use ``edge_support``.
    """

    kind: SensorKind
    location: Optional[Tuple[float, ...]] = None
    support: Optional[Tuple[Tuple[float, float], ...]] = None
    edge_support: Optional[EdgePiece] = None
    weight_profile: WeightProfile = WeightProfile.UNIFORM
    name: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SensorKind(self.kind))
        object.__setattr__(self, "weight_profile", WeightProfile(self.weight_profile))
        if self.location is not None:
            object.__setattr__(self, "location", tuple(float(v) for v in self.location))
        if self.support is not None:
            object.__setattr__(
                self, "support", tuple((float(a), float(b)) for a, b in self.support)
            )

    @classmethod
    def point(cls, *location: float, name: Optional[str] = None) -> "SensorSpec":
        return cls(SensorKind.INTERIOR_POINTWISE, location=tuple(location), name=name)

    @property
    def is_pointwise(self) -> bool:
        return self.kind in (SensorKind.INTERIOR_POINTWISE, SensorKind.BOUNDARY_POINTWISE)

    def label(self, index: int) -> str:
        return self.name or f"{self.kind.value}_{index}"

    def validate(self, domain: DomainSpec) -> None:
        """Check the sensor geometry against a domain, raising DomainError."""
        if self.is_pointwise:
            if self.location is None or not domain.contains(self.location):
                raise DomainError(f"Sensor location {self.location} is outside the domain")
            if self.kind == SensorKind.BOUNDARY_POINTWISE and not domain.on_boundary(self.location):
                raise DomainError(f"Boundary sensor location {self.location} is not on the boundary")
            return

        if self.kind == SensorKind.INTERIOR_ZONE:
            if self.support is None or len(self.support) != domain.dim:
                raise DomainError(f"Zone sensor needs one support interval per axis ({domain.dim})")
            for (a, b), length in zip(self.support, domain.lengths):
                if not (0.0 <= a < b <= length):
                    raise DomainError(f"Zone support [{a}, {b}] is outside [0, {length}] or empty")
            return

        if domain.kind == DomainKind.INTERVAL:
            raise DomainError("Boundary zone sensors need a rectangle; interval endpoints have no extent")
        if self.edge_support is None:
            raise DomainError("Boundary zone sensor needs an edge_support piece")
        piece = self.edge_support.resolved(domain)
        if not (0.0 <= piece.start < piece.end <= domain.edge_length(piece.edge)):
            raise DomainError(f"Edge support [{piece.start}, {piece.end}] on '{piece.edge}' is invalid")


def _cosine_averages(modes: np.ndarray, a: float, b: float, length: float) -> np.ndarray:
    """Mean of ``cos(n π x / L)`` over ``[a, b]`` for each n."""
    averages = np.ones(modes.size)
    nonzero = modes > 0
    k = modes[nonzero] * np.pi / length
    averages[nonzero] = (np.sin(k * b) - np.sin(k * a)) / (k * (b - a))
    return averages


def sensor_row(sensor: SensorSpec, basis: SpectralBasis) -> np.ndarray:
    """One row of C in the spectral basis.

    Args:
        sensor: Sensor geometry
        basis: Spectral basis

    Returns:
        Vector of length ``basis.size``
    """
    domain = basis.domain
    sensor.validate(domain)

    if sensor.is_pointwise:
        return basis.evaluate(np.asarray(sensor.location)[None, :])[0]

    modes = np.asarray(basis.mode_indices)
    row = np.array(basis.normalization_constants, dtype=float)

    if sensor.kind == SensorKind.INTERIOR_ZONE:
        for axis, ((a, b), length) in enumerate(zip(sensor.support, domain.lengths)):
            row *= _cosine_averages(modes[:, axis], a, b, length)
        return row

    piece = sensor.edge_support.resolved(domain)
    lx, ly = domain.lengths
    if piece.edge in ("bottom", "top"):
        y = 0.0 if piece.edge == "bottom" else ly
        row *= _cosine_averages(modes[:, 0], piece.start, piece.end, lx)
        row *= np.cos(np.pi * modes[:, 1] * y / ly)
    else:
        x = 0.0 if piece.edge == "left" else lx
        row *= np.cos(np.pi * modes[:, 0] * x / lx)
        row *= _cosine_averages(modes[:, 1], piece.start, piece.end, ly)
    return row


def output_matrix(sensors: Sequence[SensorSpec], basis: SpectralBasis) -> np.ndarray:
    """Stack sensor rows into C, shape (q, size)."""
    if not sensors:
        raise DomainError("At least one sensor is required")
    return np.vstack([sensor_row(sensor, basis) for sensor in sensors])


@dataclass(frozen=True, eq=False)
class OutputTrajectory:
    """Sampled outputs y(t_j), shape (steps + 1, q)."""

    time_grid: np.ndarray
    samples: np.ndarray
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.shape[0] != self.time_grid.size:
            raise GridMismatchError(
                f"{samples.shape[0]} sample rows for {self.time_grid.size} time points"
            )
        if samples.shape[1] < 1:
            raise DomainError("An output trajectory needs at least one channel")
        labels = tuple(self.labels) or tuple(f"y{i}" for i in range(samples.shape[1]))
        if len(labels) != samples.shape[1]:
            raise DomainError("One label per output channel is required")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    @property
    def sensor_count(self) -> int:
        return int(self.samples.shape[1])

    @property
    def horizon(self) -> float:
        return float(self.time_grid[-1])

    def same_grid(self, other: "OutputTrajectory") -> bool:
        return self.time_grid.shape == other.time_grid.shape and bool(
            np.allclose(self.time_grid, other.time_grid, rtol=0.0, atol=1e-12)
        )


def measure_trajectory(
    basis: SpectralBasis,
    z0: StateField,
    sensors: Sequence[SensorSpec],
    T: float,
    steps: int,
) -> OutputTrajectory:
    """Sample ``y(t_j) = C S_A(t_j) z0`` exactly, mode by mode."""
    c_matrix = output_matrix(sensors, basis)
    time_grid = uniform_time_grid(T, steps)
    states = np.exp(np.outer(time_grid, basis.eigenvalues)) * z0.coefficients
    labels = tuple(sensor.label(i) for i, sensor in enumerate(sensors))
    return OutputTrajectory(time_grid, states @ c_matrix.T, labels)


def stack_sensors(trajs: Sequence[OutputTrajectory]) -> OutputTrajectory:
    """Concatenate channels of trajectories sharing one time grid."""
    if not trajs:
        raise DomainError("Nothing to stack")
    first = trajs[0]
    for traj in trajs[1:]:
        if not first.same_grid(traj):
            raise GridMismatchError("Cannot stack trajectories on different time grids")
    labels: List[str] = []
    for traj in trajs:
        labels.extend(traj.labels)
    if len(set(labels)) != len(labels):
        labels = [f"y{i}" for i in range(len(labels))]
    return OutputTrajectory(
        first.time_grid, np.hstack([traj.samples for traj in trajs]), tuple(labels)
    )


def add_measurement_noise(
    traj: OutputTrajectory,
    noise_std: float,
    rng: np.random.Generator,
) -> OutputTrajectory:
    """Additive Gaussian perturbation of every sample (robustness experiments only)."""
    if noise_std < 0:
        raise DomainError(f"noise_std must be non-negative, got {noise_std}")
    if noise_std == 0:
        return traj
    noisy = traj.samples + noise_std * rng.standard_normal(traj.samples.shape)
    return OutputTrajectory(traj.time_grid, noisy, traj.labels)
