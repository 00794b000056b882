"""Exception types shared across the package."""

from __future__ import annotations


class AllenCahnError(Exception):
    """Base class for all package errors."""


class ParameterError(AllenCahnError, ValueError):
    """Scheme parameters violate one or more stability conditions.

    ``conditions`` lists a short name for every violated condition.
    """

    def __init__(self, message: str, conditions: tuple[str, ...] = ()):
        super().__init__(message)
        self.conditions = tuple(conditions)


class NumericFailure(AllenCahnError, ArithmeticError):
    """A non-finite value appeared in a field."""

    def __init__(self, message: str, node: tuple[int, ...] | None = None):
        super().__init__(message)
        self.node = node


class InvariantViolation(AllenCahnError):
    """A validated-mode invariant (bound or energy decay) did not hold."""


class IterationFailure(AllenCahnError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ConfigError(AllenCahnError, ValueError):
    """A run configuration is malformed or inconsistent."""


class Extinction(AllenCahnError):
    """A shrinking interface has vanished.

    ``time`` is the extinction time when it is known analytically.
    """

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time
