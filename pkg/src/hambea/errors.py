"""Exception types shared across the package."""

from __future__ import annotations


class HambeaError(Exception):
    """Base class for library-specific failures."""


class ConvergenceError(HambeaError):
    """An iterative solve failed to reach its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class PoleError(HambeaError):
    """A rational stability function was evaluated at (or too near) a pole."""


class DomainError(HambeaError):
    """A state left the admissible domain of a nonlinearity."""


class OrderCapError(HambeaError):
    """A requested expansion or truncation order exceeds the configured cap."""


class ConfigError(HambeaError):
    """An experiment configuration is malformed or inconsistent."""
