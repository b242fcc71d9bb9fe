"""Neumann-Laplacian eigenbasis, states, boundary fields and the linear operators between them."""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from .domain import BoundaryRegion, DomainKind, DomainSpec, boundary_grid, full_boundary
from .error_handler import BasisMismatchError, DomainError, ExtensionError, GridMismatchError

logger = logging.getLogger(__name__)

Mode = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Truncated cosine eigenbasis of ``diffusivity * Laplacian`` with Neumann BC.

    Modes are sorted by non-increasing eigenvalue, so index 0 is the constant
    mode. The operator is self-adjoint and diagonal here, which makes the
    semigroup ``S_A(t)`` a per-mode exponential.
    """

    domain: DomainSpec
    mode_count: int
    eigenvalues: np.ndarray
    mode_indices: Tuple[Mode, ...]
    normalization_constants: np.ndarray

    @property
    def size(self) -> int:
        return len(self.mode_indices)

    def index_of(self, mode: Sequence[int]) -> int:
        try:
            return self.mode_indices.index(tuple(int(m) for m in mode))
        except ValueError as e:
            raise DomainError(f"Mode {tuple(mode)} is not in the basis") from e

    def compatible(self, other: "SpectralBasis") -> bool:
        return self is other or (
            self.domain == other.domain and self.mode_count == other.mode_count
        )

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate every eigenfunction at the given points.

        Args:
            points: Array of shape (m, dim)

        Returns:
            Matrix of shape (m, size)
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.domain.dim:
            raise DomainError(f"Expected points with {self.domain.dim} coordinate(s)")
        modes = np.asarray(self.mode_indices)
        values = np.ones((points.shape[0], self.size))
        for axis, length in enumerate(self.domain.lengths):
            values *= np.cos(np.pi * np.outer(points[:, axis], modes[:, axis]) / length)
        return values * self.normalization_constants

    @cached_property
    def domain_matrix(self) -> np.ndarray:
        points, _ = self.domain.domain_grid()
        return self.evaluate(points)

    @cached_property
    def boundary_matrix(self) -> np.ndarray:
        return self.evaluate(boundary_grid(self.domain).points)

    @cached_property
    def h1_weights(self) -> np.ndarray:
        """Per-mode weights ``1 + |λ_k|`` of the H¹ proxy norm."""
        return 1.0 + np.abs(self.eigenvalues)

    @cached_property
    def trace_constant(self) -> float:
        """Smallest C with ``‖γ₀ z‖²_{L²(∂Ω)} ≤ C ‖z‖²_{H¹ proxy}`` on the truncated space."""
        grid = boundary_grid(self.domain)
        phi = self.boundary_matrix
        trace_form = phi.T @ (grid.weights[:, None] * phi)
        return float(linalg.eigh(trace_form, np.diag(self.h1_weights), eigvals_only=True)[-1])

    @cached_property
    def z_weights(self) -> np.ndarray:
        """Weights of the Z-norm: the H¹ proxy scaled so the trace is a contraction."""
        return max(1.0, self.trace_constant) * self.h1_weights

    def gram_matrix(self) -> np.ndarray:
        """Gram matrix of the eigenfunctions under the domain quadrature."""
        _, weights = self.domain.domain_grid()
        phi = self.domain_matrix
        return phi.T @ (weights[:, None] * phi)


def build_basis(domain: DomainSpec, mode_count: int) -> SpectralBasis:
    """Build the analytic Neumann eigenbasis.

    Args:
        domain: Interval or rectangle
        mode_count: Modes per axis (0 .. mode_count-1)

    Returns:
        SpectralBasis with eigenvalues sorted non-increasing
    """
    if int(mode_count) != mode_count or mode_count < 1:
        raise DomainError(f"mode_count must be a positive integer, got {mode_count}")
    mode_count = int(mode_count)
    if mode_count >= domain.grid_resolution:
        raise DomainError(
            f"mode_count {mode_count} is not resolved by grid_resolution {domain.grid_resolution}"
        )

    modes = list(itertools.product(range(mode_count), repeat=domain.dim))
    eigenvalues = np.array([
        -domain.diffusivity * sum((n * np.pi / L) ** 2 for n, L in zip(mode, domain.lengths))
        for mode in modes
    ])
    constants = np.array([
        np.prod([np.sqrt((1.0 if n == 0 else 2.0) / L) for n, L in zip(mode, domain.lengths)])
        for mode in modes
    ])

    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    constants = constants[order]
    eigenvalues.setflags(write=False)
    constants.setflags(write=False)

    logger.debug(f"Built {domain.kind.value} basis with {len(modes)} modes")
    return SpectralBasis(
        domain=domain,
        mode_count=mode_count,
        eigenvalues=eigenvalues,
        mode_indices=tuple(modes[i] for i in order),
        normalization_constants=constants,
    )


@dataclass(frozen=True, eq=False)
class StateField:
    """A state z(·, t) as coefficients in a spectral basis."""

    basis: SpectralBasis
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=float).reshape(-1)
        if coefficients.size != self.basis.size:
            raise BasisMismatchError(
                f"Expected {self.basis.size} coefficients, got {coefficients.size}"
            )
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zeros(cls, basis: SpectralBasis) -> "StateField":
        return cls(basis, np.zeros(basis.size))

    @classmethod
    def constant(cls, basis: SpectralBasis, value: float) -> "StateField":
        coefficients = np.zeros(basis.size)
        coefficients[basis.index_of((0,) * basis.domain.dim)] = value * np.sqrt(basis.domain.measure)
        return cls(basis, coefficients)

    @classmethod
    def mode(cls, basis: SpectralBasis, mode: Sequence[int], amplitude: float = 1.0) -> "StateField":
        coefficients = np.zeros(basis.size)
        coefficients[basis.index_of(mode)] = amplitude
        return cls(basis, coefficients)

    @classmethod
    def project(cls, basis: SpectralBasis, values: np.ndarray) -> "StateField":
        """L² projection of values sampled on the domain grid."""
        _, weights = basis.domain.domain_grid()
        return cls(basis, basis.domain_matrix.T @ (weights * np.asarray(values, dtype=float)))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(points) @ self.coefficients

    def on_grid(self) -> np.ndarray:
        return self.basis.domain_matrix @ self.coefficients

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def h1_norm(self) -> float:
        return float(np.sqrt(self.basis.h1_weights @ self.coefficients**2))

    def z_norm(self) -> float:
        return float(np.sqrt(self.basis.z_weights @ self.coefficients**2))

    def _check(self, other: "StateField") -> None:
        if not self.basis.compatible(other.basis):
            raise BasisMismatchError("States live on different bases")

    def __add__(self, other: "StateField") -> "StateField":
        self._check(other)
        return StateField(self.basis, self.coefficients + other.coefficients)

    def __sub__(self, other: "StateField") -> "StateField":
        self._check(other)
        return StateField(self.basis, self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "StateField":
        return StateField(self.basis, self.coefficients * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "StateField":
        return StateField(self.basis, -self.coefficients)


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Values at the quadrature nodes of a boundary region."""

    region: BoundaryRegion
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.region.node_count:
            raise GridMismatchError(
                f"Region '{self.region.name}' has {self.region.node_count} nodes, got {values.size} values"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def inner(self, other: "BoundaryField") -> float:
        """Quadrature inner product on the region."""
        if other.region is not self.region and not np.array_equal(
            other.region.node_indices, self.region.node_indices
        ):
            raise GridMismatchError("Boundary fields live on different regions")
        return float(self.region.weights @ (self.values * other.values))

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    """Coefficient vectors sampled on a time grid, shape (steps + 1, size)."""

    basis: SpectralBasis
    time_grid: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        if self.coefficients.shape != (self.time_grid.size, self.basis.size):
            raise GridMismatchError("Trajectory shape does not match time grid and basis")

    def __sub__(self, other: "StateTrajectory") -> "StateTrajectory":
        if not np.array_equal(self.time_grid, other.time_grid):
            raise GridMismatchError("Trajectories use different time grids")
        return StateTrajectory(self.basis, self.time_grid, self.coefficients - other.coefficients)


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Control samples u(t_j) on a uniform time grid, shape (steps + 1, p).

    The Duhamel integral holds ``u(t_j)`` on ``[t_j, t_{j+1})``; the implicit
    trapezoid stepper averages neighbouring samples.
    """

    time_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != self.time_grid.size:
            raise GridMismatchError("Control samples do not match the time grid")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, time_grid: np.ndarray, inputs: int = 1) -> "ControlSignal":
        return cls(time_grid, np.zeros((time_grid.size, inputs)))

    @property
    def input_count(self) -> int:
        return int(self.values.shape[1])


def uniform_time_grid(horizon: float, steps: int) -> np.ndarray:
    """``steps + 1`` uniform samples of ``[0, horizon]``."""
    if not horizon > 0:
        raise DomainError(f"Horizon must be positive, got {horizon}")
    if steps < 1:
        raise DomainError(f"Need at least one time step, got {steps}")
    grid = np.linspace(0.0, horizon, int(steps) + 1)
    grid.setflags(write=False)
    return grid


def random_state(basis: SpectralBasis, rng: np.random.Generator) -> StateField:
    """Standard normal coefficients scaled by ``(1 + |λ_k|)^{-1}``."""
    return StateField(basis, rng.standard_normal(basis.size) / basis.h1_weights)


def input_matrix(basis: SpectralBasis, input_map: Union[Sequence[StateField], np.ndarray]) -> np.ndarray:
    """Columns of B in coefficient space, shape (size, p)."""
    if isinstance(input_map, np.ndarray):
        matrix = np.asarray(input_map, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        if matrix.shape[0] != basis.size:
            raise BasisMismatchError("Input map rows do not match the basis size")
        return matrix
    if not input_map:
        return np.zeros((basis.size, 0))
    for column in input_map:
        if not basis.compatible(column.basis):
            raise BasisMismatchError("Input map column lives on another basis")
    return np.column_stack([column.coefficients for column in input_map])


def semigroup_apply(basis: SpectralBasis, t: float, state: StateField) -> StateField:
    """Apply ``S_A(t)``: multiply coefficient k by ``exp(λ_k t)``."""
    if t < 0:
        raise DomainError(f"Semigroup time must be non-negative, got {t}")
    if not basis.compatible(state.basis):
        raise BasisMismatchError("State lives on another basis")
    return StateField(basis, np.exp(basis.eigenvalues * t) * state.coefficients)


def exponential_integral(eigenvalues: np.ndarray, duration: np.ndarray) -> np.ndarray:
    """``∫_0^Δ exp(λ s) ds`` for every (Δ, λ) pair, shape (len(Δ), len(λ))."""
    lam = eigenvalues[None, :]
    delta = np.asarray(duration, dtype=float)[:, None]
    safe = np.where(lam == 0.0, 1.0, lam)
    return np.where(lam == 0.0, delta, np.expm1(lam * delta) / safe)


def mild_solution(
    basis: SpectralBasis,
    z0: StateField,
    input_map: Union[Sequence[StateField], np.ndarray],
    control: Optional[ControlSignal],
    t: float,
) -> StateField:
    """``S_A(t) z0 + ∫_0^t S_A(t-s) B u(s) ds`` with exact per-mode integration.

    Args:
        basis: Spectral basis
        z0: Initial state
        input_map: Columns of B
        control: Piecewise-constant control samples covering ``[0, t]``
        t: Evaluation time

    Returns:
        State at time t
    """
    free = semigroup_apply(basis, t, z0)
    b_matrix = input_matrix(basis, input_map)
    if control is None or b_matrix.shape[1] == 0:
        return free
    if control.input_count != b_matrix.shape[1]:
        raise GridMismatchError(
            f"Control has {control.input_count} channel(s), input map has {b_matrix.shape[1]}"
        )

    grid = control.time_grid
    if grid[-1] < t - 1e-12 * max(1.0, t):
        raise GridMismatchError(f"Control grid ends at {grid[-1]}, before t={t}")

    starts = grid[:-1]
    ends = np.minimum(grid[1:], t)
    active = ends > starts
    starts, ends = starts[active], ends[active]
    forcing = control.values[:-1][active] @ b_matrix.T

    kernel = np.exp(basis.eigenvalues[None, :] * (t - ends)[:, None])
    kernel *= exponential_integral(basis.eigenvalues, ends - starts)
    return StateField(basis, free.coefficients + np.sum(forcing * kernel, axis=0))


def trace_to_boundary(state: StateField) -> BoundaryField:
    """Trace γ₀: evaluate the expansion at every boundary quadrature node."""
    region = full_boundary(state.basis.domain)
    return BoundaryField(region, state.basis.boundary_matrix @ state.coefficients)


def _node_positions(source: BoundaryRegion, target: BoundaryRegion) -> np.ndarray:
    if source.domain != target.domain:
        raise GridMismatchError("Regions belong to different domains")
    positions = np.searchsorted(source.node_indices, target.node_indices)
    inside = positions < source.node_count
    if not inside.all() or not np.array_equal(source.node_indices[positions], target.node_indices):
        raise GridMismatchError(
            f"Nodes of region '{target.name}' are not nodes of region '{source.name}'"
        )
    return positions


def restrict_trace(bfield: BoundaryField, region: BoundaryRegion) -> BoundaryField:
    """Restriction χ_Γ: keep the values at the nodes of Γ."""
    positions = _node_positions(bfield.region, region)
    return BoundaryField(region, bfield.values[positions])


def adjoint_restrict(bfield: BoundaryField, onto: Optional[BoundaryRegion] = None) -> BoundaryField:
    """Adjoint χ_Γ*: zero-pad outside Γ with quadrature weighting.

    Args:
        bfield: Field on Γ
        onto: Larger region to extend to (defaults to ∂Ω)

    Returns:
        Field on ``onto``
    """
    onto = onto or full_boundary(bfield.region.domain)
    positions = _node_positions(onto, bfield.region)
    values = np.zeros(onto.node_count)
    values[positions] = bfield.region.weights * bfield.values / onto.weights[positions]
    return BoundaryField(onto, values)


def adjoint_trace(bfield: BoundaryField, basis: SpectralBasis) -> StateField:
    """Adjoint γ₀*: quadrature-weighted transpose of the trace in coefficient space."""
    if not bfield.region.is_full:
        raise GridMismatchError("adjoint_trace expects a field on the whole boundary")
    if bfield.region.domain != basis.domain:
        raise BasisMismatchError("Boundary field and basis belong to different domains")
    return StateField(basis, basis.boundary_matrix.T @ (bfield.region.weights * bfield.values))


def extend_from_boundary(
    bfield: BoundaryField,
    basis: SpectralBasis,
    tolerance: float = 1e-8,
) -> StateField:
    """Extension ℜ with ``γ₀ ℜ h = h`` on the boundary nodes.

    Among all truncated states reproducing ``h`` this returns the one of least
    Dirichlet energy ``Σ |λ_k| c_k²``. This is the gradient part of the H¹ proxy
    only: the ``1 + |λ_k|`` weights are not used, so the constant
    mode is not penalised and constants extend to constants.

    Args:
        bfield: Field on the whole boundary
        basis: Basis to extend into
        tolerance: Admissible relative residual

    Returns:
        StateField whose trace matches ``bfield``
    """
    if not bfield.region.is_full:
        raise GridMismatchError("extend_from_boundary expects a field on the whole boundary")
    if bfield.region.domain != basis.domain:
        raise BasisMismatchError("Boundary field and basis belong to different domains")

    sqrt_w = np.sqrt(bfield.region.weights)
    matrix = sqrt_w[:, None] * basis.boundary_matrix
    rhs = sqrt_w * bfield.values

    const = basis.index_of((0,) * basis.domain.dim)
    rest = np.array([k for k in range(basis.size) if k != const], dtype=int)
    u = matrix[:, const]
    uu = float(u @ u)

    coefficients = np.zeros(basis.size)
    if rest.size:
        energy = np.sqrt(np.abs(basis.eigenvalues[rest]))
        reduced = matrix[:, rest] - np.outer(u, u @ matrix[:, rest]) / uu
        reduced_rhs = rhs - u * (u @ rhs) / uu
        solution, _, _, _ = linalg.lstsq(reduced / energy, reduced_rhs, cond=1e-12)
        coefficients[rest] = solution / energy
    coefficients[const] = u @ (rhs - matrix @ coefficients) / uu

    residual = float(np.linalg.norm(matrix @ coefficients - rhs))
    scale = float(np.linalg.norm(rhs))
    relative = residual / scale if scale > 0 else residual
    if relative > tolerance:
        raise ExtensionError(
            f"Boundary data not reproducible with {basis.size} modes (relative residual {relative:.3e})",
            residual=relative,
        )
    return StateField(basis, coefficients)
