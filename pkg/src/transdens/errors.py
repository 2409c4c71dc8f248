"""Exception types shared across the package."""


class TransdensError(Exception):
    """Base class for all package errors."""


class ParameterError(TransdensError, ValueError):
    """Invalid numeric parameter (non-positive step, rate, size, ...)."""


class DomainError(TransdensError, ValueError):
    """Point outside the state space of a model or basis support."""


class EvaluationError(TransdensError, ArithmeticError):
    """A numeric evaluation overflowed or produced non-finite output."""


class ConfigError(TransdensError, ValueError):
    """Invalid experiment configuration."""


class SelectionError(TransdensError, RuntimeError):
    """Model selection could not produce a usable estimator."""
