"""Exception types shared across the package."""


class ReskitError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ReskitError, ValueError):
    """A shape or size constraint was violated (e.g. non power-of-two transform length)."""


class NumericError(ReskitError, ValueError):
    """Non-finite values or otherwise invalid numerics were encountered."""


class KindError(ReskitError, ValueError):
    """An activation or kernel kind is unknown, or has no closed-form kernel."""


class ConditioningError(ReskitError, RuntimeError):
    """A linear solve failed even after jitter escalation."""

    def __init__(self, message: str, smallest_pivot: float | None = None):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class DivergenceError(ReskitError, RuntimeError):
    """A closed-loop forecast produced non-finite values."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class IntegrationError(ReskitError, RuntimeError):
    """The PDE integrator blew up."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class FormatError(ReskitError, ValueError):
    """A serialized file is malformed, truncated, or fails its checksum."""


class ConfigError(ReskitError, ValueError):
    """An experiment configuration is invalid."""
