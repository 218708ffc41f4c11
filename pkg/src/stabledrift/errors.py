"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "ParameterError",
    "ConfigurationError",
    "NumericError",
    "SimulationError",
]


class ParameterError(ValueError):
    """A function argument is outside its documented domain."""


class ConfigurationError(ValueError):
    """A run configuration is malformed or references unknown components."""


class NumericError(RuntimeError):
    """A numeric routine failed to reach its accuracy target."""


class SimulationError(RuntimeError):
    """A simulated trajectory left the numerically representable range."""
