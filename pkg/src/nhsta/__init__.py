"""Counterdiabatic (transitionless) driving for decaying two- and three-level systems.

Angular frequencies are in rad/s, times in s, and hbar = 1 throughout.
"""

from . import effective, propagator, pulses, three_level, two_level
from .errors import (
    ConfigError,
    DegenerateDark,
    ExceptionalPoint,
    NhstaError,
    NonFinite,
    NumericError,
    SingularAngle,
    StepTooCoarse,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateDark",
    "ExceptionalPoint",
    "NhstaError",
    "NonFinite",
    "NumericError",
    "SingularAngle",
    "StepTooCoarse",
    "effective",
    "propagator",
    "pulses",
    "three_level",
    "two_level",
]
