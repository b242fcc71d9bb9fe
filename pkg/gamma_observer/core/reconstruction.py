"""Initial-state reconstruction, observation errors and the region-monotonicity experiments."""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .domain import BoundaryRegion, full_boundary
from .error_handler import BasisMismatchError, DomainError, NestingError, SingularSystemError
from .observability import (
    DEFAULT_THRESHOLD,
    ObservabilityProblem,
    adjoint_Kstar,
    forward_K,
    gramian_matrix,
    output_inner,
    region_trace_map,
    sampled_gramian,
)
from .sensing import OutputTrajectory, SensorKind, SensorSpec, add_measurement_noise
from .spectral import SpectralBasis, StateField, random_state

logger = logging.getLogger(__name__)

NESTING_SLACK = 1e-12
SINGULAR_RATIO = 1e-13


@dataclass(frozen=True, eq=False)
class ReconstructionProblem:
    """Measured outputs plus the nested regions the error is evaluated on."""

    observability: ObservabilityProblem
    measured: OutputTrajectory
    regularization: float = 1e-10
    regions: Tuple[BoundaryRegion, ...] = ()

    def __post_init__(self) -> None:
        if not self.regularization >= 0:
            raise DomainError(f"regularization must be non-negative, got {self.regularization}")
        regions = tuple(self.regions) or (self.observability.region,)
        for inner, outer in zip(regions, regions[1:]):
            if not inner.subset_of(outer):
                raise NestingError(
                    f"Region '{inner.name}' is not contained in region '{outer.name}'",
                    inner=inner.name,
                    outer=outer.name,
                )
        object.__setattr__(self, "regions", regions)

    @property
    def basis(self) -> SpectralBasis:
        return self.observability.basis

    def with_measured(self, measured: OutputTrajectory) -> "ReconstructionProblem":
        return replace(self, measured=measured)


def _check_same_basis(a: StateField, b: StateField) -> None:
    if not a.basis.compatible(b.basis):
        raise BasisMismatchError("States live on different bases")


def reconstruct_initial_state(problem: ReconstructionProblem) -> StateField:
    """Minimize ``‖K z0 - y‖² + ε ‖z0‖²`` through the normal equations.

    The system ``(K*K + εI) z0 = K*y`` is solved after symmetric diagonal
    equilibration; with ``ε = 0`` a numerically singular system is refused.

    Args:
        problem: Reconstruction setup with measured data

    Returns:
        Reconstructed initial state
    """
    epsilon = problem.regularization
    gramian = sampled_gramian(problem.observability)
    rhs = adjoint_Kstar(problem.observability, problem.measured).coefficients

    diagonal = np.diag(gramian) + epsilon
    largest = float(diagonal.max())
    if largest <= 0.0:
        raise SingularSystemError(
            "Outputs carry no information on any mode; use regularization > 0", regularization=epsilon
        )
    scaling = 1.0 / np.sqrt(np.maximum(diagonal, SINGULAR_RATIO * largest))
    system = scaling[:, None] * (gramian + epsilon * np.eye(gramian.shape[0])) * scaling[None, :]

    if epsilon == 0.0:
        eigenvalues = linalg.eigvalsh(system)
        if eigenvalues[0] <= SINGULAR_RATIO * eigenvalues[-1]:
            raise SingularSystemError(
                "Normal equations are numerically singular; use regularization > 0 or fewer modes",
                condition=float(eigenvalues[-1] / max(eigenvalues[0], np.finfo(float).tiny)),
            )

    try:
        solution = linalg.solve(system, scaling * rhs, assume_a="pos")
    except linalg.LinAlgError as e:
        raise SingularSystemError(f"Normal equations could not be solved: {e}") from e
    return StateField(problem.basis, scaling * solution)


def objective_value(problem: ReconstructionProblem, z0: StateField) -> float:
    """``‖K z0 - y‖²`` in the sampled output norm plus ``ε ‖z0‖²``."""
    return output_misfit(problem, z0) + problem.regularization * float(z0.coefficients @ z0.coefficients)


def output_misfit(problem: ReconstructionProblem, z0: StateField) -> float:
    predicted = forward_K(problem.observability, z0)
    gap = OutputTrajectory(predicted.time_grid, predicted.samples - problem.measured.samples)
    return output_inner(gap, gap)


def observation_error(z0_true: StateField, z0_rec: StateField, region: BoundaryRegion) -> float:
    """``Er = ‖χ_Γ γ₀ (z0_true - z0_rec)‖²`` with the quadrature of Γ."""
    _check_same_basis(z0_true, z0_rec)
    basis = z0_true.basis
    if region.domain != basis.domain:
        raise BasisMismatchError("Region and states belong to different domains")
    difference = z0_true.coefficients - z0_rec.coefficients
    trace = basis.boundary_matrix[region.node_indices] @ difference
    return float(region.weights @ trace**2)


def domain_observation_error(z0_true: StateField, z0_rec: StateField) -> float:
    """Whole-domain error in the squared Z-norm."""
    _check_same_basis(z0_true, z0_rec)
    return (z0_true - z0_rec).z_norm() ** 2


@dataclass(frozen=True)
class ErrorReport:
    """Errors of one reconstruction on every region of the nest and on Ω."""

    reconstructed: StateField
    residual: float
    per_region_errors: Tuple[Tuple[str, float], ...]
    domain_error: float
    minimizer_value: float
    objective: float
    regularization: float

    def error_for(self, name: str) -> float:
        return dict(self.per_region_errors)[name]

    @property
    def nesting_holds(self) -> bool:
        values = [value for _, value in self.per_region_errors]
        return all(a <= b + NESTING_SLACK for a, b in zip(values, values[1:]))

    @property
    def domain_comparison_holds(self) -> bool:
        return self.per_region_errors[-1][1] <= self.domain_error + NESTING_SLACK


def error_regions(problem: ReconstructionProblem) -> Tuple[BoundaryRegion, ...]:
    """The nest of the problem, closed by the whole boundary."""
    regions = problem.regions
    if regions[-1].is_full:
        return regions
    return regions + (full_boundary(problem.basis.domain),)


def evaluate_errors(
    problem: ReconstructionProblem,
    z0_true: StateField,
    z0_rec: Optional[StateField] = None,
) -> ErrorReport:
    """Reconstruct (unless given) and evaluate Er on every region and on Ω."""
    z0_rec = z0_rec if z0_rec is not None else reconstruct_initial_state(problem)
    per_region = tuple(
        (region.name, observation_error(z0_true, z0_rec, region)) for region in error_regions(problem)
    )
    misfit = output_misfit(problem, z0_rec)
    return ErrorReport(
        reconstructed=z0_rec,
        residual=misfit,
        per_region_errors=per_region,
        domain_error=domain_observation_error(z0_true, z0_rec),
        minimizer_value=per_region[0][1],
        objective=misfit + problem.regularization * float(z0_rec.coefficients @ z0_rec.coefficients),
        regularization=problem.regularization,
    )


@dataclass(frozen=True, eq=False)
class ObservableSet:
    """Orthonormal basis of the recoverable subspace Ψ for one region (or for Ω)."""

    label: str
    region: Optional[str]
    sensors: Tuple[str, ...]
    basis: np.ndarray
    threshold: float

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[1])

    def projection_residual(self, other: "ObservableSet") -> float:
        """Largest distance of a unit vector of ``other`` from this subspace."""
        if other.dimension == 0:
            return 0.0
        projected = self.basis @ (self.basis.T @ other.basis)
        return float(np.max(np.linalg.norm(other.basis - projected, axis=0)))

    def contains(self, other: "ObservableSet", tolerance: float = 1e-10) -> bool:
        return self.projection_residual(other) <= tolerance


def build_observable_set(
    basis: SpectralBasis,
    sensors: Sequence[SensorSpec],
    region: Optional[BoundaryRegion] = None,
    threshold: float = DEFAULT_THRESHOLD,
    horizon: float = 1.0,
) -> ObservableSet:
    """Recoverable subspace of the coefficient space.

    With ``region=None`` this is Ψ_{Ω_E}, the span of Gramian eigenvectors with
    eigenvalue above ``threshold``. For a region Γ it is Ψ_{Γ_E}: Ψ_{Ω_E} plus
    the unrecoverable directions whose Γ-trace vanishes, so that the Γ-trace of
    every member is fixed by the outputs.
    """
    if not threshold > 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    problem = ObservabilityProblem(
        basis, tuple(sensors), region or full_boundary(basis.domain), horizon, 1
    )
    eigenvalues, eigenvectors = linalg.eigh(gramian_matrix(problem))
    recoverable = eigenvectors[:, eigenvalues > threshold]
    labels = tuple(sensor.label(i) for i, sensor in enumerate(problem.sensors))

    if region is None:
        return ObservableSet("Omega_E", None, labels, recoverable, threshold)

    unrecoverable = eigenvectors[:, eigenvalues <= threshold]
    if unrecoverable.shape[1]:
        invisible = unrecoverable @ linalg.null_space(region_trace_map(basis, region) @ unrecoverable)
    else:
        invisible = unrecoverable
    spanning = np.hstack([recoverable, invisible])
    subspace = linalg.orth(spanning) if spanning.shape[1] else spanning
    logger.debug(
        f"Observable set on '{region.name}': dim {subspace.shape[1]} "
        f"(recoverable {recoverable.shape[1]}, trace-free kernel {invisible.shape[1]})"
    )
    return ObservableSet("Gamma_E", region.name, labels, subspace, threshold)


@dataclass(frozen=True)
class TrialResult:
    """One seeded monotonicity trial."""

    trial_id: int
    seed: int
    region_errors: Tuple[Tuple[str, float], ...]
    domain_error: float
    residual: float
    nesting_holds: bool
    domain_comparison_holds: bool

    @property
    def passed(self) -> bool:
        return self.nesting_holds and self.domain_comparison_holds


@dataclass
class MonotonicityReport:
    """All trials of a monotonicity experiment, sorted by trial id."""

    trials: List[TrialResult] = field(default_factory=list)
    regularization: float = 0.0
    noise_std: float = 0.0

    @property
    def pass_count(self) -> int:
        return sum(1 for trial in self.trials if trial.passed)

    @property
    def all_passed(self) -> bool:
        return self.pass_count == len(self.trials)

    def summary(self) -> Dict[str, Dict[str, float]]:
        """Mean and max of Er per region plus the Ω-level error."""
        columns: Dict[str, List[float]] = {}
        for trial in self.trials:
            for name, value in trial.region_errors:
                columns.setdefault(name, []).append(value)
            columns.setdefault("domain", []).append(trial.domain_error)
        return {
            name: {"mean": float(np.mean(values)), "max": float(np.max(values))}
            for name, values in columns.items()
        }


def run_monotonicity_trial(
    problem: ReconstructionProblem,
    trial_id: int,
    seed: int,
    noise_std: float = 0.0,
) -> TrialResult:
    """Draw z0 from ``seed + trial_id``, measure, reconstruct once and compare errors."""
    trial_seed = seed + trial_id
    rng = np.random.default_rng(trial_seed)
    z0 = random_state(problem.basis, rng)
    measured = add_measurement_noise(forward_K(problem.observability, z0), noise_std, rng)
    report = evaluate_errors(problem.with_measured(measured), z0)
    return TrialResult(
        trial_id=trial_id,
        seed=trial_seed,
        region_errors=report.per_region_errors,
        domain_error=report.domain_error,
        residual=report.residual,
        nesting_holds=report.nesting_holds,
        domain_comparison_holds=report.domain_comparison_holds,
    )


def monotonicity_experiment(
    problem: ReconstructionProblem,
    trials: int,
    seed: int,
    noise_std: float = 0.0,
) -> MonotonicityReport:
    """Check ``Er(Γ₁) ≤ Er(Γ₂) ≤ … ≤ Er(∂Ω) ≤ ‖·‖²_Z`` on seeded random states.

    Args:
        problem: Reconstruction setup; its measured data is replaced per trial
        trials: Number of trials
        seed: Base seed; trial k uses ``seed + k``
        noise_std: Optional Gaussian output noise

    Returns:
        MonotonicityReport
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    results = [run_monotonicity_trial(problem, k, seed, noise_std) for k in range(trials)]
    report = MonotonicityReport(results, problem.regularization, noise_std)
    logger.info(f"Monotonicity: {report.pass_count}/{trials} trials passed")
    return report


@dataclass(frozen=True)
class SweepRow:
    location: Tuple[float, ...]
    error: float
    residual: float
    modulus: Optional[float]


def sensor_sweep(
    problem: ReconstructionProblem,
    locations: Sequence[Sequence[float]],
    z0: StateField,
    sensor_index: int = 0,
) -> List[SweepRow]:
    """Move one pointwise sensor across ``locations`` and record ``Er(z0*, b)`` on the first region.

    ``modulus`` is ``|ΔEr| / |Δb|`` with respect to the previous location.
    """
    sensors = list(problem.observability.sensors)
    if not 0 <= sensor_index < len(sensors):
        raise DomainError(f"sensor_index {sensor_index} out of range")
    moving = sensors[sensor_index]
    if not moving.is_pointwise:
        raise DomainError("Only pointwise sensors can be swept")

    region = problem.regions[0]
    rows: List[SweepRow] = []
    previous: Optional[Tuple[np.ndarray, float]] = None
    for location in locations:
        kind = moving.kind
        point = tuple(float(v) for v in location)
        if kind == SensorKind.BOUNDARY_POINTWISE and not problem.basis.domain.on_boundary(point):
            raise DomainError(f"Sweep location {point} is not on the boundary")
        sensors[sensor_index] = replace(moving, location=point)
        observability = problem.observability.with_sensors(sensors)
        measured = forward_K(observability, z0)
        local = ReconstructionProblem(observability, measured, problem.regularization, problem.regions)
        z_rec = reconstruct_initial_state(local)
        error = observation_error(z0, z_rec, region)

        modulus = None
        current = np.asarray(point)
        if previous is not None:
            step = float(np.linalg.norm(current - previous[0]))
            modulus = abs(error - previous[1]) / step if step > 0 else 0.0
        rows.append(SweepRow(point, error, output_misfit(local, z_rec), modulus))
        previous = (current, error)

    logger.debug(f"Sensor sweep over {len(rows)} location(s) on '{region.name}'")
    return rows
