"""Error types, exception hierarchy and error bookkeeping for experiment runs."""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import ValidationError

logger = logging.getLogger(__name__)


class ErrorType(str, Enum):
    """Types of errors that can occur."""
    CONFIGURATION_ERROR = "configuration_error"
    DOMAIN_ERROR = "domain_error"
    NUMERICAL_ERROR = "numerical_error"
    INVARIANT_VIOLATION = "invariant_violation"
    UNKNOWN_ERROR = "unknown_error"


class GammaObserverError(Exception):
    """Base class for all library errors."""

    error_type: ErrorType = ErrorType.UNKNOWN_ERROR

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context: Dict[str, Any] = context


class ConfigurationError(GammaObserverError):
    """A scenario file is missing, malformed or inconsistent."""

    error_type = ErrorType.CONFIGURATION_ERROR

    def __init__(self, message: str, field_path: Optional[str] = None, **context: Any):
        super().__init__(message, field_path=field_path, **context)
        self.field_path = field_path


class DomainError(GammaObserverError, ValueError):
    """Invalid geometry, basis or argument."""

    error_type = ErrorType.DOMAIN_ERROR


class BasisMismatchError(DomainError):
    """Two objects live on different spectral bases."""


class GridMismatchError(DomainError):
    """Time grids or quadrature nodes do not line up."""


class NestingError(DomainError):
    """Boundary regions are not nested as required."""


class NumericalError(GammaObserverError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""

    error_type = ErrorType.NUMERICAL_ERROR


class ExtensionError(NumericalError):
    """Boundary data cannot be reproduced in the truncated basis."""

    def __init__(self, message: str, residual: float, **context: Any):
        super().__init__(message, residual=residual, **context)
        self.residual = residual


class SingularSystemError(NumericalError):
    """A linear system is numerically singular."""


class UnobservableModeError(NumericalError):
    """A mode that must be moved is invisible to every sensor."""

    def __init__(self, message: str, mode: Tuple[int, ...], **context: Any):
        super().__init__(message, mode=mode, **context)
        self.mode = mode


class GainDesignError(NumericalError):
    """A gain design method failed to reach its target."""


class NothingToFitError(NumericalError):
    """Every sample sits at the noise floor."""


class InvariantViolation(GammaObserverError, AssertionError):
    """A checked property of an experiment failed."""

    error_type = ErrorType.INVARIANT_VIOLATION


EXIT_CODES: Dict[ErrorType, int] = {
    ErrorType.CONFIGURATION_ERROR: 2,
    ErrorType.DOMAIN_ERROR: 2,
    ErrorType.NUMERICAL_ERROR: 1,
    ErrorType.INVARIANT_VIOLATION: 1,
    ErrorType.UNKNOWN_ERROR: 1,
}


@dataclass
class ErrorContext:
    """Context information for an error."""

    error_type: ErrorType
    error_message: str
    timestamp: datetime
    command: Optional[str] = None
    field_path: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


class ErrorHandler:
    """Classifies errors, keeps a bounded history and maps errors to exit codes."""

    def __init__(self, max_history_size: int = 1000):
        """Initialize the error handler.

        Args:
            max_history_size: Maximum number of recorded errors to keep
        """
        self.error_history: List[ErrorContext] = []
        self.max_history_size = max_history_size

    def classify_error(self, error: Exception) -> ErrorType:
        """Classify an error by type.

        Args:
            error: Exception to classify

        Returns:
            ErrorType
        """
        if isinstance(error, GammaObserverError):
            return error.error_type

        if isinstance(error, (ValidationError, yaml.YAMLError, FileNotFoundError, IsADirectoryError)):
            return ErrorType.CONFIGURATION_ERROR
        if isinstance(error, AssertionError):
            return ErrorType.INVARIANT_VIOLATION
        if isinstance(error, (np.linalg.LinAlgError, ArithmeticError)):
            return ErrorType.NUMERICAL_ERROR
        return ErrorType.UNKNOWN_ERROR

    def handle_error(
        self,
        error: Exception,
        command: Optional[str] = None,
        field_path: Optional[str] = None,
    ) -> int:
        """Record an error and return the exit code it maps to.

        Args:
            error: The exception that occurred
            command: Subcommand being executed
            field_path: Offending config field, when known

        Returns:
            Process exit code
        """
        error_type = self.classify_error(error)
        if field_path is None:
            field_path = getattr(error, "field_path", None)
        metadata = dict(error.context) if isinstance(error, GammaObserverError) else {}
        error_context = ErrorContext(
            error_type=error_type,
            error_message=str(error),
            timestamp=datetime.utcnow(),
            command=command,
            field_path=field_path,
            metadata=metadata,
        )
        self._record_error(error_context)
        return EXIT_CODES[error_type]

    def _record_error(self, error_context: ErrorContext) -> None:
        """Record an error in the history.

        Args:
            error_context: Error context to record
        """
        self.error_history.append(error_context)

        if len(self.error_history) > self.max_history_size:
            self.error_history = self.error_history[-self.max_history_size:]

        location = f" at {error_context.field_path}" if error_context.field_path else ""
        logger.error(
            f"Error recorded: {error_context.error_type.value}{location} - "
            f"{error_context.error_message} (command: {error_context.command})"
        )

    def get_error_stats(self) -> Dict[str, Any]:
        """Get error statistics.

        Returns:
            Dictionary with error counts per type
        """
        error_counts: Dict[str, int] = {}
        for error in self.error_history:
            error_type = error.error_type.value
            error_counts[error_type] = error_counts.get(error_type, 0) + 1

        return {
            "total_errors": len(self.error_history),
            "error_types": error_counts,
        }

    def clear_history(self) -> None:
        """Clear error history."""
        self.error_history.clear()
        logger.info("Cleared error history")
