"""Exception hierarchy for hofer-lab."""

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base exception for hofer-lab operations."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details: Dict[str, Any] = details or {}


class DomainError(LabError):
    """Raised when an operation receives mathematically invalid input."""

    pass


class ConfigurationError(LabError):
    """Raised when an experiment config or an atlas fails validation."""

    pass


class IntegrationError(LabError):
    """Raised when the implicit midpoint fixed-point iteration does not converge."""

    def __init__(
        self,
        message: str,
        step: float,
        time: float,
        location: Any,
        residual: float,
    ):
        super().__init__(
            message,
            {"step": step, "time": time, "location": location, "residual": residual},
        )
        self.step = step
        self.time = time
        self.location = location
        self.residual = residual


class ScheduleError(LabError):
    """Raised when an Anosov-Katok schedule cannot be built or is invalid."""

    pass


class PrecisionError(LabError):
    """Raised when exact arithmetic cannot decide a comparison at the available depth."""

    pass
