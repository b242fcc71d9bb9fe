"""Base classes for output-injection gain designers."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional

import numpy as np
from scipy import linalg

from ..core.error_handler import DomainError
from ..core.spectral import SpectralBasis


class DesignMethod(str, Enum):
    """Available gain design methods."""
    MODAL_SHIFT = "modal_shift"
    SCALED_ADJOINT = "scaled_adjoint"


@dataclass(frozen=True, eq=False)
class ObserverGain:
    """Output-to-state injection H, shape (size, q), one column per output channel."""

    columns: np.ndarray
    design_method: DesignMethod
    target_rate: float

    def __post_init__(self) -> None:
        columns = np.array(self.columns, dtype=float)
        if columns.ndim != 2:
            raise DomainError("Gain columns must form a matrix")
        if not np.all(np.isfinite(columns)):
            raise DomainError("Gain has non-finite entries")
        columns.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "design_method", DesignMethod(self.design_method))

    @property
    def sensor_count(self) -> int:
        return int(self.columns.shape[1])

    def scaled(self, factor: float) -> "ObserverGain":
        return ObserverGain(self.columns * factor, self.design_method, self.target_rate)


def spectral_abscissa(matrix: np.ndarray) -> float:
    """Largest real part of the eigenvalues of a square matrix."""
    if matrix.size == 0:
        return -np.inf
    if np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(matrix).max())):
        return float(linalg.eigvalsh(matrix)[-1])
    return float(np.max(linalg.eigvals(matrix).real))


class GainDesigner(ABC):
    """Abstract base class for gain designers."""

    method: DesignMethod
    options: FrozenSet[str] = frozenset()

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """Initialize the designer with method-specific options."""
        self.config = dict(config or {})

    @abstractmethod
    def design(
        self,
        basis: SpectralBasis,
        c_matrix: np.ndarray,
        target_rate: float,
    ) -> ObserverGain:
        """
        Compute a gain for the truncated pair (diag(λ), C).

        Args:
            basis: Spectral basis carrying the eigenvalues
            c_matrix: Output matrix, shape (q, size)
            target_rate: Required decay rate σ > 0

        Returns:
            ObserverGain with spectral abscissa of A - HC at most -target_rate
        """
        pass

    def validate_config(self) -> bool:
        """
        Validate the designer configuration.

        Returns:
            True if every option is known to the designer, False otherwise
        """
        return set(self.config) <= self.options
