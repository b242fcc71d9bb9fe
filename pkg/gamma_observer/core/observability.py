"""Observation operator K, its adjoint, Gramians and the Γ-observability verdicts."""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..gains.base import ObserverGain
from .domain import BoundaryRegion
from .error_handler import BasisMismatchError, DomainError, GridMismatchError, NumericalError
from .sensing import OutputTrajectory, SensorSpec, measure_trajectory, output_matrix
from .spectral import SpectralBasis, StateField, uniform_time_grid

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-8
KERNEL_TOLERANCE = 1e-10
LEAK_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class ObservabilityProblem:
    """Basis, sensors, region and time horizon of one observation setup."""

    basis: SpectralBasis
    sensors: Tuple[SensorSpec, ...]
    region: BoundaryRegion
    horizon: float
    time_steps: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if not self.sensors:
            raise DomainError("An observability problem needs at least one sensor")
        if not self.horizon > 0:
            raise DomainError(f"Horizon must be positive, got {self.horizon}")
        if self.time_steps < 1:
            raise DomainError(f"time_steps must be at least 1, got {self.time_steps}")
        if self.region.domain != self.basis.domain:
            raise BasisMismatchError("Region and basis belong to different domains")

    @cached_property
    def time_grid(self) -> np.ndarray:
        return uniform_time_grid(self.horizon, self.time_steps)

    @cached_property
    def output_matrix(self) -> np.ndarray:
        return output_matrix(self.sensors, self.basis)

    def with_sensors(self, sensors: Sequence[SensorSpec]) -> "ObservabilityProblem":
        return ObservabilityProblem(self.basis, tuple(sensors), self.region, self.horizon, self.time_steps)

    def with_region(self, region: BoundaryRegion) -> "ObservabilityProblem":
        return ObservabilityProblem(self.basis, self.sensors, region, self.horizon, self.time_steps)


@dataclass(frozen=True, eq=False)
class GramianReport:
    """Gramian and the trace-side recoverability verdict for one region.

    ``singular_values`` belong to ``Qᵀ R G⁺ Rᵀ Q`` on the trace space, while
    ``trace_singular_values`` keep the spectrum of ``Qᵀ R G Rᵀ Q``.
    ``kernel_leak`` is the relative size of ``R`` on the unobservable kernel.
    """

    label: str
    gramian: np.ndarray
    restricted_map: np.ndarray
    singular_values: np.ndarray
    trace_singular_values: np.ndarray
    kernel_dimension: int
    kernel_leak: float
    observable: bool
    threshold: float
    min_eigenvalue: float
    max_eigenvalue: float

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1]) if self.singular_values.size else 0.0

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -1e-10 * max(self.max_eigenvalue, 0.0)


@dataclass(frozen=True)
class DetectabilityReport:
    """Spectrum-based Γ_E-detectability verdict of ``A - H C``."""

    detectable: bool
    decay_rate: float
    eigenvalues: np.ndarray
    region: str


def time_weights(time_grid: np.ndarray) -> np.ndarray:
    """Trapezoid weights on a (uniform or not) time grid."""
    weights = np.zeros(time_grid.size)
    steps = np.diff(time_grid)
    weights[:-1] += steps / 2
    weights[1:] += steps / 2
    return weights


def output_inner(a: OutputTrajectory, b: OutputTrajectory) -> float:
    """Trapezoid inner product on sampled L²(0, T; R^q)."""
    if not a.same_grid(b) or a.sensor_count != b.sensor_count:
        raise GridMismatchError("Output trajectories are not comparable")
    return float(time_weights(a.time_grid) @ np.sum(a.samples * b.samples, axis=1))


def forward_K(problem: ObservabilityProblem, z: StateField) -> OutputTrajectory:
    """K: z ↦ C S_A(·) z on the problem's time grid."""
    if not problem.basis.compatible(z.basis):
        raise BasisMismatchError("State is not on the problem basis")
    return measure_trajectory(problem.basis, z, problem.sensors, problem.horizon, problem.time_steps)


def adjoint_Kstar(problem: ObservabilityProblem, y: OutputTrajectory) -> StateField:
    """K*: y ↦ Σ_j w_j S_A(t_j) C* y(t_j), adjoint of :func:`forward_K` under :func:`output_inner`."""
    grid = problem.time_grid
    if y.time_grid.shape != grid.shape or not np.allclose(y.time_grid, grid, rtol=0.0, atol=1e-12):
        raise GridMismatchError("Output is not sampled on the problem time grid")
    if y.sensor_count != len(problem.sensors):
        raise GridMismatchError(
            f"Output has {y.sensor_count} channel(s), problem has {len(problem.sensors)} sensor(s)"
        )
    decay = np.exp(np.outer(grid, problem.basis.eigenvalues))
    projected = y.samples @ problem.output_matrix
    coefficients = time_weights(grid) @ (decay * projected)
    return StateField(problem.basis, coefficients)


def _pair_integrals(eigenvalues: np.ndarray, horizon: float) -> np.ndarray:
    """``∫_0^T exp((λ_j + λ_k) s) ds`` for every pair."""
    total = eigenvalues[:, None] + eigenvalues[None, :]
    safe = np.where(total == 0.0, 1.0, total)
    return np.where(total == 0.0, horizon, np.expm1(total * horizon) / safe)


def gramian_matrix(problem: ObservabilityProblem) -> np.ndarray:
    """Closed-form continuous-time Gramian ``K*K`` in coefficient space."""
    c_matrix = problem.output_matrix
    return (c_matrix.T @ c_matrix) * _pair_integrals(problem.basis.eigenvalues, problem.horizon)


def sampled_gramian(problem: ObservabilityProblem) -> np.ndarray:
    """``K*K`` for the trapezoid output inner product, exact for sampled data."""
    grid = problem.time_grid
    decay = np.exp(np.outer(grid, problem.basis.eigenvalues))
    pairs = decay.T @ (time_weights(grid)[:, None] * decay)
    c_matrix = problem.output_matrix
    return (c_matrix.T @ c_matrix) * pairs


def region_trace_map(basis: SpectralBasis, region: BoundaryRegion) -> np.ndarray:
    """χ_Γ γ₀ as a matrix, rows scaled by the square roots of the quadrature weights."""
    if region.domain != basis.domain:
        raise BasisMismatchError("Region and basis belong to different domains")
    return np.sqrt(region.weights)[:, None] * basis.boundary_matrix[region.node_indices]


def output_kernel(
    basis: SpectralBasis,
    c_matrix: np.ndarray,
    tolerance: float = KERNEL_TOLERANCE,
) -> np.ndarray:
    """Orthonormal basis of the coefficient directions no output can see.

    An output is a sum of ``exp(λ t)`` terms over the distinct eigenvalues, and
    distinct exponentials are independent on ``[0, T]``. A direction is therefore
    invisible exactly when, inside every eigenspace, each sensor row annihilates
    its component. Ranks are decided against ``tolerance`` times the largest
    entry of ``c_matrix``, so the result does not depend on how badly the
    Gramian is conditioned.

    Args:
        basis: Spectral basis
        c_matrix: Output matrix, one row per sensor
        tolerance: Relative rank cutoff on the sensor rows

    Returns:
        Matrix of shape (size, kernel dimension)
    """
    eigenvalues = basis.eigenvalues
    order = np.argsort(-eigenvalues, kind="stable")
    scale = float(np.max(np.abs(c_matrix))) if c_matrix.size else 0.0
    cutoff = tolerance * (scale if scale > 0 else 1.0)

    columns = []
    start = 0
    while start < order.size:
        stop = start + 1
        while stop < order.size and np.isclose(
            eigenvalues[order[stop]], eigenvalues[order[start]], rtol=1e-10, atol=1e-12
        ):
            stop += 1
        group = order[start:stop]
        _, singular_values, vh = linalg.svd(c_matrix[:, group])
        rank = int(np.sum(singular_values > cutoff))
        for row in vh[rank:]:
            direction = np.zeros(basis.size)
            direction[group] = row
            columns.append(direction)
        start = stop

    if not columns:
        return np.zeros((basis.size, 0))
    return np.column_stack(columns)


def _recoverability(
    label: str,
    gramian: np.ndarray,
    restricted_map: np.ndarray,
    kernel: np.ndarray,
    threshold: float,
) -> GramianReport:
    try:
        eigenvalues = linalg.eigvalsh(gramian)
        visible = linalg.null_space(kernel.T) if kernel.shape[1] else np.eye(gramian.shape[0])
        pseudo_inverse = visible @ linalg.pinvh(visible.T @ gramian @ visible) @ visible.T
        range_basis = linalg.orth(restricted_map)
        compressed = range_basis.T @ restricted_map
        singular_values = linalg.svdvals(compressed @ pseudo_inverse @ compressed.T)
        trace_singular_values = linalg.svdvals(compressed @ gramian @ compressed.T)
        map_norm = linalg.norm(restricted_map, 2)
        leak = float(linalg.norm(restricted_map @ kernel, 2) / map_norm) if kernel.shape[1] and map_norm > 0 else 0.0
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Singular value computation failed for '{label}': {e}") from e

    # The trace is determined by the outputs only if R vanishes on the kernel.
    observable = bool(singular_values.size and leak <= LEAK_TOLERANCE and singular_values[-1] > threshold)
    report = GramianReport(
        label=label,
        gramian=gramian,
        restricted_map=restricted_map,
        singular_values=singular_values,
        trace_singular_values=trace_singular_values,
        kernel_dimension=int(kernel.shape[1]),
        kernel_leak=leak,
        observable=observable,
        threshold=threshold,
        min_eigenvalue=float(eigenvalues[0]),
        max_eigenvalue=float(eigenvalues[-1]),
    )
    if not report.is_psd:
        logger.warning(f"Gramian for '{label}' has eigenvalue {report.min_eigenvalue:.3e} < 0")
    logger.debug(
        f"Recoverability on '{label}': rank {singular_values.size}, "
        f"σ_min={report.sigma_min:.3e}, kernel dim {report.kernel_dimension}, "
        f"leak={leak:.3e}, observable={observable}"
    )
    return report


def boundary_gramian(problem: ObservabilityProblem, threshold: float = DEFAULT_THRESHOLD) -> GramianReport:
    """Gramian plus the Γ-trace recoverability test.

    The trace space of Γ is the range of the weighted map ``R = χ_Γ γ₀``. The
    outputs fix a state only up to the kernel of ``G``, so Γ is observable when
    ``R`` annihilates that kernel and ``Qᵀ R G⁺ Rᵀ Q``, with ``Q`` an
    orthonormal basis of the trace space, has every singular value above
    ``threshold``. The spectrum of ``Qᵀ R G Rᵀ Q`` is reported alongside.

    Args:
        problem: Observability setup
        threshold: Verdict threshold on σ_min

    Returns:
        GramianReport
    """
    return _recoverability(
        problem.region.name,
        gramian_matrix(problem),
        region_trace_map(problem.basis, problem.region),
        output_kernel(problem.basis, problem.output_matrix),
        threshold,
    )


def domain_gramian(problem: ObservabilityProblem, threshold: float = DEFAULT_THRESHOLD) -> GramianReport:
    """Whole-state recoverability; the trace space is the full coefficient space."""
    return _recoverability(
        "domain",
        gramian_matrix(problem),
        np.eye(problem.basis.size),
        output_kernel(problem.basis, problem.output_matrix),
        threshold,
    )


def is_gamma_observable(
    problem: ObservabilityProblem,
    threshold: float = DEFAULT_THRESHOLD,
) -> Tuple[bool, GramianReport]:
    """Decide Γ-observability at the truncation order of the basis."""
    if not threshold > 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    report = boundary_gramian(problem, threshold)
    return report.observable, report


def is_gamma_detectable(
    basis: SpectralBasis,
    sensors: Sequence[SensorSpec],
    gain: ObserverGain,
    region: Optional[BoundaryRegion] = None,
) -> DetectabilityReport:
    """Spectrum of ``diag(λ) - H C``: detectable when every real part is strictly negative.

    Args:
        basis: Spectral basis
        sensors: Sensors defining C
        gain: Output injection H
        region: Region the verdict is reported for

    Returns:
        DetectabilityReport with ``decay_rate = -max Re(eig)``
    """
    c_matrix = output_matrix(sensors, basis)
    if gain.columns.shape != (basis.size, c_matrix.shape[0]):
        raise GridMismatchError(
            f"Gain shape {gain.columns.shape} does not match ({basis.size}, {c_matrix.shape[0]})"
        )
    generator = np.diag(basis.eigenvalues) - gain.columns @ c_matrix
    try:
        eigenvalues = linalg.eigvals(generator)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Eigenvalue computation failed: {e}") from e

    decay_rate = float(-np.max(eigenvalues.real))
    name = region.name if region is not None else "boundary"
    logger.debug(f"Detectability on '{name}': decay rate {decay_rate:.6g}")
    return DetectabilityReport(decay_rate > 0, decay_rate, eigenvalues, name)
