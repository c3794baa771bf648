"""Exception types raised by the MDI-QKD simulation pipeline."""

from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised by mdiqkd."""

    def __init__(self, message: str, operation: Optional[str] = None):
        """
        Initialize the error.

        Args:
            message: Human-readable description of the failure
            operation: Dotted "<module>.<function>" label of the failing operation
        """
        super().__init__(message)
        self.message = message
        self.operation = operation

    def describe(self) -> str:
        """Render the error with its operation label, if any."""
        if self.operation:
            return f"{self.operation}: {self.message}"
        return self.message


class ParameterValidationError(SimulationError, ValueError):
    """A physical parameter is outside its admissible range."""


class ConfigError(SimulationError, ValueError):
    """A run configuration failed validation."""


class DomainError(SimulationError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class DomainExceeded(SimulationError):
    """The non-triggered distribution tail is exhausted at the requested photon number."""


class AsymmetricConfig(SimulationError):
    """A symmetric closed form was requested for an asymmetric configuration."""


class PreconditionViolated(SimulationError):
    """An estimator precondition (ratio ordering, alpha domain, ratio chain) failed."""


class DegenerateDenominator(SimulationError):
    """An estimator denominator vanished under the relative guard."""


class EmptyAlphaDomain(SimulationError):
    """The admissible vacuum-ratio interval of the passive protocol is empty."""


class ZeroStatistics(SimulationError):
    """A fluctuation band was requested for a zero count product."""


class NoFeasibleConfig(SimulationError):
    """No candidate configuration at a distance produced a positive key rate."""
