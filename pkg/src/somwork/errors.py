"""Exception types raised by the simulation library."""


class SomError(Exception):
    """Base class for all library errors."""


class DimensionError(SomError, ValueError):
    """Operands carry incompatible or oversized Hilbert-space dimensions."""


class CutoffError(SomError, ValueError):
    """A Fock cutoff is too small for the requested state or dynamics."""


class IntegrationError(SomError, RuntimeError):
    """The fixed-step integrator's local error estimate exceeded tolerance."""


class TaintedTrajectoryError(SomError, RuntimeError):
    """A trajectory leaked population into the Fock truncation boundary.

    Attributes
    ----------
    first_tainted_time : float
        Earliest sample time at which the boundary population exceeded the
        threshold.
    """

    def __init__(self, message, first_tainted_time=None):
        super().__init__(message)
        self.first_tainted_time = first_tainted_time


class ConfigError(SomError, ValueError):
    """A scenario configuration failed validation."""
