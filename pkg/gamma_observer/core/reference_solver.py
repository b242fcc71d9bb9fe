"""Crank-Nicolson finite-difference solver used as an independent oracle.

Works on grid values only; the spectral machinery is touched solely to turn
states into grid samples and back.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import numpy.typing as npt
from scipy import sparse
from scipy.sparse.linalg import splu

from .domain import DomainSpec
from .error_handler import GridMismatchError
from .spectral import ControlSignal, SpectralBasis, StateField, input_matrix

logger = logging.getLogger(__name__)


def neumann_laplacian_1d(nodes: int, length: float) -> sparse.csr_matrix:
    """Second-difference matrix with homogeneous Neumann ends (ghost-point closure).

    Args:
        nodes: Number of grid nodes including both ends
        length: Interval length

    Returns:
        Sparse (nodes, nodes) matrix
    """
    h = length / (nodes - 1)
    main = np.full(nodes, -2.0)
    upper = np.ones(nodes - 1)
    lower = np.ones(nodes - 1)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr") / h**2


def neumann_laplacian(domain: DomainSpec) -> sparse.csr_matrix:
    """``diffusivity * Laplacian`` on the tensor grid of the domain.

    Rows follow the ``ij`` ordering of :meth:`DomainSpec.domain_grid`.
    """
    n = domain.grid_resolution
    blocks = [neumann_laplacian_1d(n, length) for length in domain.lengths]
    operator = blocks[0]
    for block in blocks[1:]:
        operator = sparse.kronsum(block, operator, format="csr")
    return (domain.diffusivity * operator).tocsr()


@dataclass
class ReferenceSolution:
    """Grid values on every time step, shape (steps + 1, grid points)."""

    domain: DomainSpec
    time_grid: npt.NDArray[np.float64]
    values: npt.NDArray[np.float64]

    def final_state(self, basis: SpectralBasis) -> StateField:
        return StateField.project(basis, self.values[-1])


class CrankNicolsonSolver:
    """Implicit trapezoid stepping of ``v' = L v + f`` on a fixed grid."""

    def __init__(self, domain: DomainSpec, time_step: float):
        self.domain = domain
        self.time_step = time_step
        self.operator = neumann_laplacian(domain)
        identity = sparse.identity(self.operator.shape[0], format="csc")
        self._explicit = (identity + 0.5 * time_step * self.operator).tocsr()
        self._implicit = splu((identity - 0.5 * time_step * self.operator).tocsc())
        logger.debug(f"Factorized CN step matrix of size {self.operator.shape[0]}, dt={time_step:.3g}")

    def step(self, values: np.ndarray, forcing: Optional[np.ndarray] = None) -> np.ndarray:
        rhs = self._explicit @ values
        if forcing is not None:
            rhs = rhs + self.time_step * forcing
        return self._implicit.solve(rhs)

    def solve(
        self,
        initial_values: np.ndarray,
        steps: int,
        forcing: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Advance ``steps`` times.

        Args:
            initial_values: Grid values at t = 0
            steps: Number of steps
            forcing: Optional per-step forcing, shape (steps, grid points); row j
                acts on ``[t_j, t_{j+1})``

        Returns:
            Array of shape (steps + 1, grid points)
        """
        if forcing is not None and forcing.shape[0] < steps:
            raise GridMismatchError(f"Forcing covers {forcing.shape[0]} of {steps} steps")
        history = np.empty((steps + 1, initial_values.size))
        history[0] = initial_values
        for j in range(steps):
            history[j + 1] = self.step(history[j], None if forcing is None else forcing[j])
        return history


def reference_solve(
    basis: SpectralBasis,
    z0: StateField,
    horizon: float,
    steps: int,
    input_map: Union[Sequence[StateField], np.ndarray, None] = None,
    control: Optional[ControlSignal] = None,
) -> ReferenceSolution:
    """Solve the controlled heat equation on the grid with Crank-Nicolson.

    The initial state and the columns of B are sampled on the domain grid; the
    control is held at ``u(t_j)`` over each step, matching :func:`mild_solution`.
    """
    domain = basis.domain
    time_grid = np.linspace(0.0, horizon, steps + 1)
    solver = CrankNicolsonSolver(domain, horizon / steps)

    forcing = None
    if control is not None and input_map is not None:
        b_matrix = input_matrix(basis, input_map)
        if control.time_grid.size != steps + 1:
            raise GridMismatchError("Control grid does not match the requested steps")
        forcing = control.values[:-1] @ (basis.domain_matrix @ b_matrix).T

    values = solver.solve(z0.on_grid(), steps, forcing)
    return ReferenceSolution(domain, time_grid, values)
