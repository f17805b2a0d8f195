"""Exception types raised across the package."""


class OctoswimError(Exception):
    """Base class for all package errors."""


class GeometryError(OctoswimError, ValueError):
    """A linkage or arm dimension set violates its construction invariants."""


class InvalidTarget(OctoswimError, ValueError):
    """A synthesis target is outside the admissible domain (e.g. K <= 1)."""


class NoSolution(OctoswimError):
    """Linkage synthesis cannot reach the requested travel ratio.

    ``k_range`` holds the (min, max) travel ratio achievable for the given
    crank length and offset.
    """

    def __init__(self, message, k_range=None):
        super().__init__(message)
        self.k_range = k_range


class Unassemblable(OctoswimError):
    """The support-rod closure has no solution at some slider position."""


class Unstable(OctoswimError, RuntimeError):
    """Arm integration diverged; ``time`` is the simulated time of failure."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DegenerateGeometry(OctoswimError, ValueError):
    """A polyline has repeated points."""


class SeriesTooShort(OctoswimError, ValueError):
    """A time series does not span enough crank revolutions."""


class ConfigError(OctoswimError, ValueError):
    """A scenario configuration failed schema validation."""
