"""Exception hierarchy shared by the physics and harness layers."""

from __future__ import annotations


class NhstaError(Exception):
    """Base class for all package errors."""


class NumericError(NhstaError):
    """A numeric failure; carries the time at which it happened when known."""

    def __init__(self, message: str, time: float | None = None):
        if time is not None:
            message = f"{message} (t = {time:.6e} s)"
        super().__init__(message)
        self.time = time


class SingularAngle(NumericError):
    """Mixing-angle argument sits on an arctan branch point (1 + u^2 = 0)."""


class ExceptionalPoint(NumericError):
    """Eigenvalues coalesce; spectral projectors are undefined."""


class DegenerateDark(NumericError):
    """Both Raman couplings vanish, so the dark-state direction is undefined."""


class StepTooCoarse(NumericError):
    """Integrator step does not resolve the fastest frequency in the problem."""


class NonFinite(NumericError):
    """A state amplitude overflowed or became NaN."""


class ConfigError(NhstaError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
