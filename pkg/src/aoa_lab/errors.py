"""Exception types raised by aoa_lab."""


class AoaLabError(Exception):
    """Base class for all package errors."""


class ConfigError(AoaLabError, ValueError):
    """Invalid or infeasible experiment configuration."""


class NumericalError(AoaLabError, ArithmeticError):
    """A numerical routine failed (singular system, no convergence, ...)."""
