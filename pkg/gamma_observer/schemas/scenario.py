"""Scenario schema: the YAML file that drives every experiment."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..core.domain import BoundaryRegion, DomainKind, DomainSpec, EdgePiece, full_boundary
from ..core.error_handler import ConfigurationError, DomainError
from ..core.sensing import SensorKind, SensorSpec, WeightProfile
from ..core.spectral import ControlSignal, SpectralBasis, StateField, build_basis, random_state
from ..gains import DesignMethod


class DomainConfig(BaseModel):
    """Spatial domain."""

    kind: DomainKind = Field(default=DomainKind.INTERVAL, description="interval or rectangle")
    lengths: List[float] = Field(default_factory=lambda: [1.0], description="Length per axis")
    diffusivity: float = Field(default=1.0, gt=0, description="Coefficient of the Laplacian")
    grid_resolution: int = Field(default=64, ge=4, description="Grid points per axis")

    @field_validator("lengths")
    def lengths_positive(cls, v):
        if not v or any(length <= 0 for length in v):
            raise ValueError("lengths must be non-empty and positive")
        return v


class PieceConfig(BaseModel):
    """One piece of a boundary region."""

    edge: str = Field(..., description="Edge identifier (left/right, or bottom/right/top/left)")
    start: float = Field(default=0.0, description="Start of the piece along the edge")
    end: Optional[float] = Field(None, description="End of the piece along the edge (default: edge length)")

    def to_piece(self) -> EdgePiece:
        return EdgePiece(self.edge, self.start, self.end)


class RegionConfig(BaseModel):
    """A boundary region; regions are listed from innermost to outermost."""

    name: str = Field(..., description="Region identifier used in reports")
    pieces: List[PieceConfig] = Field(..., min_length=1, description="Edge pieces")

    @field_validator("name")
    def name_not_empty(cls, v):
        if not v.strip():
            raise ValueError("Region name cannot be empty")
        return v.strip()


class SensorConfig(BaseModel):
    """One sensor, contributing one output channel."""

    kind: SensorKind = Field(default=SensorKind.INTERIOR_POINTWISE, description="Sensor geometry")
    location: Optional[List[float]] = Field(None, description="Point for pointwise kinds")
    support: Optional[List[Tuple[float, float]]] = Field(None, description="Per-axis interval for interior zones")
    edge_support: Optional[PieceConfig] = Field(None, description="Edge piece for boundary zones")
    weight_profile: WeightProfile = Field(default=WeightProfile.UNIFORM, description="Zone weight")
    name: Optional[str] = Field(None, description="Channel label")

    def to_sensor(self) -> SensorSpec:
        return SensorSpec(
            kind=self.kind,
            location=tuple(self.location) if self.location is not None else None,
            support=tuple(self.support) if self.support is not None else None,
            edge_support=self.edge_support.to_piece() if self.edge_support is not None else None,
            weight_profile=self.weight_profile,
            name=self.name,
        )


class InputConfig(BaseModel):
    """One column of B: a scaled eigenfunction."""

    mode: List[int] = Field(..., description="Mode index tuple")
    amplitude: float = Field(default=1.0, description="Scale of the eigenfunction")


class SimulationConfig(BaseModel):
    """Forward simulation settings."""

    horizon: float = Field(default=0.5, gt=0, description="Final time T")
    time_steps: int = Field(default=200, ge=1, description="Uniform steps on [0, T]")
    initial_state: Optional[List[float]] = Field(
        None, description="Initial coefficients; random (seeded) when omitted"
    )
    inputs: List[InputConfig] = Field(default_factory=list, description="Columns of B")
    control: List[float] = Field(default_factory=list, description="Amplitude per input channel")
    control_frequency: float = Field(default=0.0, ge=0, description="u(t) = amplitude * cos(2π f t)")

    @model_validator(mode="after")
    def control_matches_inputs(self) -> "SimulationConfig":
        if self.control and len(self.control) != len(self.inputs):
            raise ValueError("control needs one amplitude per input")
        return self


class ObservabilityConfig(BaseModel):
    """Observability verdict settings."""

    threshold: float = Field(default=1e-8, gt=0, description="σ_min threshold of the verdict")


class ObserverConfig(BaseModel):
    """Observer design and simulation settings."""

    method: DesignMethod = Field(default=DesignMethod.MODAL_SHIFT, description="Gain design method")
    target_rate: float = Field(default=1.0, gt=0, description="Required decay rate σ")
    shift_modes: Optional[List[List[int]]] = Field(None, description="Explicit modes to shift (modal_shift)")
    horizon: float = Field(default=5.0, gt=0, description="Observer run length")
    time_steps: int = Field(default=500, ge=8, description="Uniform steps of the observer run")
    transient_fraction: float = Field(default=0.1, ge=0, lt=1, description="Share of samples skipped by the fit")
    noise_floor: float = Field(default=1e-14, gt=0, description="Norms below this are not fitted")
    bound_tolerance: float = Field(default=0.1, ge=0, description="Slack of the final-time bound check")
    min_decay_ratio: float = Field(default=0.9, gt=0, le=1, description="Fitted σ must reach this share of the target")


class ReconstructionConfig(BaseModel):
    """Reconstruction and experiment settings."""

    regularization: float = Field(default=1e-10, ge=0, description="Ridge weight ε")
    trials: int = Field(default=10, ge=1, description="Monotonicity trials")
    seed: int = Field(default=0, ge=0, description="Base seed")
    noise_std: float = Field(default=0.0, ge=0, description="Optional output noise (extension)")
    workers: int = Field(default=1, ge=1, description="Parallel trial workers")
    sweep_locations: List[List[float]] = Field(default_factory=list, description="Sensor positions of the sweep")
    sweep_sensor: int = Field(default=0, ge=0, description="Index of the swept sensor")


class ScenarioConfig(BaseModel):
    """Main scenario configuration."""

    domain: DomainConfig = Field(default_factory=DomainConfig, description="Spatial domain")
    mode_count: int = Field(default=8, ge=1, description="Modes per axis")
    sensors: List[SensorConfig] = Field(..., min_length=1, description="Sensors")
    regions: List[RegionConfig] = Field(..., min_length=1, description="Nested boundary regions, innermost first")
    simulation: SimulationConfig = Field(default_factory=SimulationConfig, description="Simulation settings")
    observability: ObservabilityConfig = Field(default_factory=ObservabilityConfig, description="Verdict settings")
    observer: ObserverConfig = Field(default_factory=ObserverConfig, description="Observer settings")
    reconstruction: ReconstructionConfig = Field(
        default_factory=ReconstructionConfig, description="Reconstruction settings"
    )
    output_dir: str = Field(default="results", description="Directory for report.txt and CSV files")
    logging: Dict[str, Any] = Field(default_factory=dict, description="Logging configuration")

    def with_overrides(
        self,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        output_dir: Optional[str] = None,
    ) -> "ScenarioConfig":
        """Apply command-line overrides."""
        updates: Dict[str, Any] = {}
        if seed is not None:
            updates["seed"] = seed
        if trials is not None:
            updates["trials"] = trials
        try:
            reconstruction = ReconstructionConfig.model_validate(
                {**self.reconstruction.model_dump(), **updates}
            )
        except ValidationError as e:
            loc = ".".join(str(part) for part in e.errors()[0]["loc"])
            raise ConfigurationError(
                f"Invalid override: {e.errors()[0]['msg']}", field_path=f"reconstruction.{loc}"
            ) from e
        changes: Dict[str, Any] = {"reconstruction": reconstruction}
        if output_dir is not None:
            changes["output_dir"] = output_dir
        return self.model_copy(update=changes)

    def build(self) -> "Scenario":
        """Turn the validated schema into core objects, naming the offending field on failure."""
        try:
            domain = DomainSpec(
                kind=self.domain.kind,
                lengths=tuple(self.domain.lengths),
                diffusivity=self.domain.diffusivity,
                grid_resolution=self.domain.grid_resolution,
            )
        except DomainError as e:
            raise ConfigurationError(str(e), field_path="domain") from e

        try:
            basis = build_basis(domain, self.mode_count)
        except DomainError as e:
            raise ConfigurationError(str(e), field_path="mode_count") from e

        sensors = []
        for i, sensor_config in enumerate(self.sensors):
            sensor = sensor_config.to_sensor()
            try:
                sensor.validate(domain)
            except DomainError as e:
                raise ConfigurationError(str(e), field_path=f"sensors.{i}") from e
            sensors.append(sensor)

        regions = self._build_regions(domain)

        input_map = []
        for i, input_config in enumerate(self.simulation.inputs):
            try:
                input_map.append(StateField.mode(basis, input_config.mode, input_config.amplitude))
            except DomainError as e:
                raise ConfigurationError(str(e), field_path=f"simulation.inputs.{i}.mode") from e

        initial = self.simulation.initial_state
        if initial is not None and len(initial) != basis.size:
            raise ConfigurationError(
                f"initial_state has {len(initial)} coefficients, basis has {basis.size}",
                field_path="simulation.initial_state",
            )

        if self.reconstruction.sweep_locations and self.reconstruction.sweep_sensor >= len(sensors):
            raise ConfigurationError(
                "sweep_sensor does not name a configured sensor", field_path="reconstruction.sweep_sensor"
            )
        for i, location in enumerate(self.reconstruction.sweep_locations):
            if not domain.contains(location):
                raise ConfigurationError(
                    f"Sweep location {location} is outside the domain",
                    field_path=f"reconstruction.sweep_locations.{i}",
                )

        if self.observer.shift_modes:
            for i, mode in enumerate(self.observer.shift_modes):
                try:
                    basis.index_of(mode)
                except DomainError as e:
                    raise ConfigurationError(str(e), field_path=f"observer.shift_modes.{i}") from e

        return Scenario(
            config=self,
            domain=domain,
            basis=basis,
            sensors=tuple(sensors),
            regions=regions,
            input_map=tuple(input_map),
        )

    def _build_regions(self, domain: DomainSpec) -> Tuple[BoundaryRegion, ...]:
        regions: List[BoundaryRegion] = []
        names = set()
        for i, region_config in enumerate(self.regions):
            if region_config.name in names:
                raise ConfigurationError(
                    f"Duplicate region name '{region_config.name}'", field_path=f"regions.{i}.name"
                )
            names.add(region_config.name)
            pieces = [piece.to_piece() for piece in region_config.pieces]
            for j, piece in enumerate(pieces):
                try:
                    BoundaryRegion.from_pieces(domain, [piece], region_config.name)
                except DomainError as e:
                    raise ConfigurationError(str(e), field_path=f"regions.{i}.pieces.{j}") from e
            try:
                region = BoundaryRegion.from_pieces(domain, pieces, region_config.name)
            except DomainError as e:
                raise ConfigurationError(str(e), field_path=f"regions.{i}.pieces") from e
            if regions and not regions[-1].subset_of(region):
                raise ConfigurationError(
                    f"Region '{regions[-1].name}' is not contained in region '{region.name}'",
                    field_path=f"regions.{i}",
                )
            regions.append(region)
        return tuple(regions)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Core objects built from a validated ScenarioConfig."""

    config: ScenarioConfig
    domain: DomainSpec
    basis: SpectralBasis
    sensors: Tuple[SensorSpec, ...]
    regions: Tuple[BoundaryRegion, ...]
    input_map: Tuple[StateField, ...]

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    @property
    def region_nest(self) -> Tuple[BoundaryRegion, ...]:
        """Configured regions, closed by the whole boundary when the last one is smaller."""
        if self.regions[-1].is_full:
            return self.regions
        return self.regions + (full_boundary(self.domain),)

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.config.reconstruction.seed + offset)

    def initial_state(self) -> StateField:
        coefficients = self.config.simulation.initial_state
        if coefficients is not None:
            return StateField(self.basis, np.asarray(coefficients, dtype=float))
        return random_state(self.basis, self.rng())

    def control(self, time_grid: np.ndarray) -> Optional[ControlSignal]:
        simulation = self.config.simulation
        if not simulation.inputs:
            return None
        amplitudes = np.asarray(simulation.control or [0.0] * len(simulation.inputs), dtype=float)
        profile = np.cos(2 * np.pi * simulation.control_frequency * time_grid)
        return ControlSignal(time_grid, np.outer(profile, amplitudes))
