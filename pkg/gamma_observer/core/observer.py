"""Identity Γ_E-observer: gain design, simulation, error norms and decay certification."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from ..gains import DesignMethod, ObserverGain, get_designer
from .domain import BoundaryRegion, full_boundary
from .error_handler import (
    BasisMismatchError,
    DomainError,
    GridMismatchError,
    NothingToFitError,
    SingularSystemError,
)
from .observability import region_trace_map
from .sensing import OutputTrajectory, SensorSpec, output_matrix
from .spectral import ControlSignal, SpectralBasis, StateField, StateTrajectory, input_matrix

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-14


def design_gain(
    basis: SpectralBasis,
    sensors: Sequence[SensorSpec],
    method: Union[DesignMethod, str],
    target_rate: float,
    options: Optional[Dict[str, Any]] = None,
) -> ObserverGain:
    """Design H so that every eigenvalue of ``A - H C`` has real part at most ``-target_rate``.

    Args:
        basis: Spectral basis
        sensors: Sensors defining C
        method: Registered design method
        target_rate: Required decay rate σ > 0
        options: Designer-specific options (for example ``shift_modes``)

    Returns:
        ObserverGain
    """
    if not target_rate > 0:
        raise DomainError(f"target_rate must be positive, got {target_rate}")
    designer = get_designer(method, options)
    gain = designer.design(basis, output_matrix(sensors, basis), target_rate)
    logger.info(f"Designed {gain.design_method.value} gain for {len(sensors)} sensor(s), σ={target_rate}")
    return gain


@dataclass(frozen=True, eq=False)
class ObserverSystem:
    """Truncated identity observer ``w' = (A - H C) w + B u + H y``."""

    basis: SpectralBasis
    sensors: Tuple[SensorSpec, ...]
    gain: ObserverGain
    generator: np.ndarray
    input_map: np.ndarray
    region: BoundaryRegion
    output_matrix: np.ndarray

    @property
    def state_matrix(self) -> np.ndarray:
        return np.diag(self.basis.eigenvalues)


def assemble_observer(
    basis: SpectralBasis,
    sensors: Sequence[SensorSpec],
    gain: ObserverGain,
    region: Optional[BoundaryRegion] = None,
    input_map: Union[Sequence[StateField], np.ndarray, None] = None,
) -> ObserverSystem:
    """Build the observer with ``L_Γ = A - H_Γ C`` and ``G_Γ = B``."""
    c_matrix = output_matrix(sensors, basis)
    if gain.columns.shape != (basis.size, c_matrix.shape[0]):
        raise GridMismatchError(
            f"Gain shape {gain.columns.shape} does not match ({basis.size}, {c_matrix.shape[0]})"
        )
    region = region or full_boundary(basis.domain)
    if region.domain != basis.domain:
        raise BasisMismatchError("Region and basis belong to different domains")
    b_matrix = input_matrix(basis, input_map if input_map is not None else [])
    generator = np.diag(basis.eigenvalues) - gain.columns @ c_matrix
    return ObserverSystem(
        basis=basis,
        sensors=tuple(sensors),
        gain=gain,
        generator=generator,
        input_map=b_matrix,
        region=region,
        output_matrix=c_matrix,
    )


def _uniform_step(time_grid: np.ndarray) -> float:
    steps = np.diff(time_grid)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise GridMismatchError("Implicit trapezoid stepping needs a uniform time grid")
    return float(steps[0])


def _crank_nicolson(
    generator: np.ndarray,
    initial: np.ndarray,
    time_grid: np.ndarray,
    forcing: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Implicit trapezoid integration of ``x' = M x + f``; f sampled on the grid nodes."""
    dt = _uniform_step(time_grid)
    identity = np.eye(generator.shape[0])
    explicit = identity + 0.5 * dt * generator
    try:
        factors = linalg.lu_factor(identity - 0.5 * dt * generator, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularSystemError(f"Step matrix could not be factorized: {e}") from e
    if np.any(np.abs(np.diag(factors[0])) == 0.0):
        raise SingularSystemError(f"Step matrix is singular for dt={dt}")

    history = np.empty((time_grid.size, initial.size))
    history[0] = initial
    for j in range(time_grid.size - 1):
        rhs = explicit @ history[j]
        if forcing is not None:
            rhs += 0.5 * dt * (forcing[j] + forcing[j + 1])
        history[j + 1] = linalg.lu_solve(factors, rhs)
    return history


def _control_forcing(
    input_map: np.ndarray,
    control: Optional[ControlSignal],
    time_grid: np.ndarray,
) -> Optional[np.ndarray]:
    if control is None or input_map.shape[1] == 0:
        return None
    if control.time_grid.shape != time_grid.shape or not np.allclose(control.time_grid, time_grid):
        raise GridMismatchError("Control is not sampled on the simulation grid")
    if control.input_count != input_map.shape[1]:
        raise GridMismatchError(
            f"Control has {control.input_count} channel(s), input map has {input_map.shape[1]}"
        )
    return control.values @ input_map.T


def simulate_plant(
    basis: SpectralBasis,
    z0: StateField,
    time_grid: np.ndarray,
    input_map: Union[Sequence[StateField], np.ndarray, None] = None,
    control: Optional[ControlSignal] = None,
) -> StateTrajectory:
    """Integrate ``z' = A z + B u`` with the observer's implicit trapezoid scheme."""
    if not basis.compatible(z0.basis):
        raise BasisMismatchError("Initial state is not on the basis")
    b_matrix = input_matrix(basis, input_map if input_map is not None else [])
    forcing = _control_forcing(b_matrix, control, time_grid)
    history = _crank_nicolson(np.diag(basis.eigenvalues), z0.coefficients, time_grid, forcing)
    return StateTrajectory(basis, np.asarray(time_grid), history)


def plant_outputs(sensors: Sequence[SensorSpec], trajectory: StateTrajectory) -> OutputTrajectory:
    """Outputs ``C z(t_j)`` of a simulated plant trajectory."""
    c_matrix = output_matrix(sensors, trajectory.basis)
    labels = tuple(sensor.label(i) for i, sensor in enumerate(sensors))
    return OutputTrajectory(trajectory.time_grid, trajectory.coefficients @ c_matrix.T, labels)


def simulate_observer(
    system: ObserverSystem,
    y: OutputTrajectory,
    control: Optional[ControlSignal] = None,
    w0: Optional[StateField] = None,
) -> StateTrajectory:
    """Integrate ``w' = (A - H C) w + B u + H y``.

    Args:
        system: Assembled observer
        y: Measured outputs; fixes the time grid
        control: Control samples on the same grid
        w0: Initial observer state (zero by default)

    Returns:
        Observer trajectory on the output time grid
    """
    if y.sensor_count != system.gain.sensor_count:
        raise GridMismatchError(
            f"Output has {y.sensor_count} channel(s), gain expects {system.gain.sensor_count}"
        )
    w0 = w0 if w0 is not None else StateField.zeros(system.basis)
    if not system.basis.compatible(w0.basis):
        raise BasisMismatchError("Observer initial state is not on the basis")

    forcing = y.samples @ system.gain.columns.T
    control_forcing = _control_forcing(system.input_map, control, y.time_grid)
    if control_forcing is not None:
        forcing = forcing + control_forcing

    history = _crank_nicolson(system.generator, w0.coefficients, y.time_grid, forcing)
    return StateTrajectory(system.basis, y.time_grid, history)


def generator_flow(system: ObserverSystem, initial: StateField, time_grid: np.ndarray) -> StateTrajectory:
    """Exact flow ``exp((A - H C) t) x0`` sampled on a uniform grid."""
    dt = _uniform_step(time_grid)
    propagator = linalg.expm(system.generator * dt)
    history = np.empty((time_grid.size, system.basis.size))
    history[0] = initial.coefficients
    for j in range(time_grid.size - 1):
        history[j + 1] = propagator @ history[j]
    return StateTrajectory(system.basis, np.asarray(time_grid), history)


def error_trajectory(
    system: ObserverSystem,
    z_traj: StateTrajectory,
    w_traj: StateTrajectory,
) -> np.ndarray:
    """Sampled ``‖χ_Γ γ₀ (w(t) - z(t))‖`` on the observer's region."""
    difference = w_traj - z_traj
    restricted = region_trace_map(system.basis, system.region)
    return np.linalg.norm(difference.coefficients @ restricted.T, axis=1)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of ``F exp(-σ t)`` to sampled norms."""

    F: float
    sigma: float
    residual: float
    window: Tuple[float, float]
    samples_used: int

    def bound(self, t: float) -> float:
        return self.F * float(np.exp(-self.sigma * t))


def fit_exponential_decay(
    times: np.ndarray,
    norms: np.ndarray,
    transient_fraction: float = 0.1,
    noise_floor: float = NOISE_FLOOR,
    min_samples: int = 8,
) -> DecayFit:
    """Fit a line to ``log ‖e(t)‖``.

    The first ``transient_fraction`` of samples is dropped and the window
    ends at the first sample at or below ``noise_floor``.

    Args:
        times: Sample times
        norms: Sampled norms
        transient_fraction: Leading share of samples to skip
        noise_floor: Norms at or below this are not fitted
        min_samples: Smallest admissible window

    Returns:
        DecayFit
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.shape != norms.shape:
        raise GridMismatchError("times and norms differ in length")

    start = int(np.floor(transient_fraction * times.size))
    window_times = times[start:]
    window_norms = norms[start:]
    below = np.flatnonzero(window_norms <= noise_floor)
    if below.size:
        window_times = window_times[: below[0]]
        window_norms = window_norms[: below[0]]

    if window_norms.size == 0:
        raise NothingToFitError("nothing to fit: every sample is at the noise floor")
    if window_norms.size < min_samples:
        raise NothingToFitError(
            f"nothing to fit: {window_norms.size} sample(s) above the noise floor, need {min_samples}"
        )

    log_norms = np.log(window_norms)
    slope, intercept = np.polyfit(window_times, log_norms, 1)
    residual = float(np.sqrt(np.mean((log_norms - (slope * window_times + intercept)) ** 2)))
    return DecayFit(
        F=float(np.exp(intercept)),
        sigma=float(-slope),
        residual=residual,
        window=(float(window_times[0]), float(window_times[-1])),
        samples_used=int(window_norms.size),
    )


@dataclass(frozen=True)
class DecayCertificate:
    """Final-time comparison of the Γ-error with the fitted exponential bound."""

    fit: Optional[DecayFit]
    final_error: float
    bound: float
    certified: bool


def certify_decay(
    times: np.ndarray,
    norms: np.ndarray,
    tolerance: float = 0.1,
    **fit_options: Any,
) -> DecayCertificate:
    """Check ``‖e(T)‖ ≤ F exp(-σ T) (1 + tolerance)`` with a positive fitted σ.

    A trajectory that stays at the noise floor throughout is certified
    without a fit.
    """
    final_error = float(norms[-1])
    floor = fit_options.get("noise_floor", NOISE_FLOOR)
    if np.max(norms) <= floor:
        return DecayCertificate(None, final_error, float(floor), True)
    fit = fit_exponential_decay(times, norms, **fit_options)
    bound = fit.bound(float(times[-1])) * (1.0 + tolerance)
    certified = fit.sigma > 0 and final_error <= bound
    if not certified:
        logger.warning(f"Decay not certified: final error {final_error:.3e}, bound {bound:.3e}")
    return DecayCertificate(fit, final_error, bound, certified)


@dataclass
class IdentityReport:
    """Frobenius residuals of the identity-observer relations."""

    residuals: Dict[str, float] = field(default_factory=dict)

    def holds(self, name: str, tolerance: float = 1e-12) -> bool:
        return self.residuals[name] <= tolerance


def verify_observer_identities(
    system: ObserverSystem,
    plant_input_map: Union[Sequence[StateField], np.ndarray, None] = None,
) -> IdentityReport:
    """Residuals of the identity-observer relations with α = I, M = 0, N = I.

    ``sylvester_as_printed`` is ``α A + L α - H C``; ``sylvester_luenberger``
    is ``α A - L α - H C``. Only the second vanishes for a Luenberger design;
    both are reported.
    """
    n = system.basis.size
    alpha = np.eye(n)
    injection = np.zeros((n, system.output_matrix.shape[0]))
    n_matrix = np.eye(n)
    a_matrix = system.state_matrix
    hc = system.gain.columns @ system.output_matrix
    l_matrix = system.generator
    plant_b = (
        system.input_map
        if plant_input_map is None
        else input_matrix(system.basis, plant_input_map)
    )
    input_residual = (
        float(np.linalg.norm(system.input_map - plant_b))
        if plant_b.shape == system.input_map.shape
        else float("inf")
    )

    report = IdentityReport(
        residuals={
            "output_injection": float(
                np.linalg.norm(injection @ system.output_matrix + n_matrix @ alpha - np.eye(n))
            ),
            "sylvester_as_printed": float(np.linalg.norm(alpha @ a_matrix + l_matrix @ alpha - hc)),
            "sylvester_luenberger": float(np.linalg.norm(alpha @ a_matrix - l_matrix @ alpha - hc)),
            "input_map": input_residual,
        }
    )
    logger.debug(f"Observer identity residuals: {report.residuals}")
    return report
