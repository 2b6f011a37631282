"""Drive envelopes with exact time derivatives.

Every function here accepts a scalar time or a numpy array of times and
broadcasts elementwise. Frequencies are angular (rad/s), times in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PulseSample:
    """Envelope value and its time derivative at one or more time points."""

    value: complex | np.ndarray
    derivative: complex | np.ndarray

    def conj(self) -> "PulseSample":
        return PulseSample(np.conj(self.value), np.conj(self.derivative))


@dataclass(frozen=True)
class AeParams:
    """Allen-Eberly pulse: sech Rabi envelope with a tanh detuning chirp."""

    omega0: float
    delta: float
    t0: float
    tf: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ConfigError("omega0", "must be > 0")
        if not self.t0 > 0:
            raise ConfigError("t0", "must be > 0")
        if not self.tf > 0:
            raise ConfigError("tf", "must be > 0")


@dataclass(frozen=True)
class GaussianPairParams:
    """Counterintuitively ordered Stokes/pump Gaussians separated by 2*tau."""

    omega0: float
    tau: float
    T: float
    tf: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ConfigError("omega0", "must be > 0")
        if not self.T > 0:
            raise ConfigError("T", "must be > 0")
        if not self.tf > 0:
            raise ConfigError("tf", "must be > 0")
        if not self.tau >= 0:
            raise ConfigError("tau", "must be >= 0")


def ae_drive(t, p: AeParams) -> tuple[PulseSample, PulseSample]:
    """Return ``(rabi, detuning)`` of the Allen-Eberly pulse at time(s) ``t``."""
    rate = np.pi / (2.0 * p.t0)
    x = rate * (np.asarray(t, dtype=float) - 0.5 * p.tf)
    e = np.exp(-np.abs(x))
    sech = 2.0 * e / (1.0 + e * e)  # no cosh overflow far from the pulse
    tanh = np.tanh(x)
    chirp = 2.0 * p.delta**2 * p.t0 / np.pi
    rabi = PulseSample(
        value=(p.omega0 * sech).astype(complex),
        derivative=(-p.omega0 * rate * sech * tanh).astype(complex),
    )
    detuning = PulseSample(
        value=(chirp * tanh).astype(complex),
        # chirp * rate == delta**2
        derivative=(p.delta**2 * sech**2).astype(complex),
    )
    return rabi, detuning


def _gaussian(t, center: float, width: float, amplitude: float) -> PulseSample:
    x = (t - center) / width
    value = amplitude * np.exp(-(x**2))
    return PulseSample(
        value=value.astype(complex),
        derivative=(-2.0 * x / width * value).astype(complex),
    )


def gaussian_pair(t, p: GaussianPairParams) -> tuple[PulseSample, PulseSample]:
    """Return ``(pump, stokes)``; the Stokes pulse peaks ``2*tau`` before the pump."""
    t = np.asarray(t, dtype=float)
    mid = 0.5 * p.tf
    pump = _gaussian(t, mid + p.tau, p.T, p.omega0)
    stokes = _gaussian(t, mid - p.tau, p.T, p.omega0)
    return pump, stokes


def dress_counter_rotating(s: PulseSample, omega: float, t) -> PulseSample:
    """Multiply an RWA envelope by ``1 + exp(-2i omega t)`` (product rule on the derivative)."""
    t = np.asarray(t, dtype=float)
    phase = np.exp(-2j * omega * t)
    return PulseSample(
        value=s.value * (1.0 + phase),
        derivative=s.derivative * (1.0 + phase) + s.value * (-2j * omega) * phase,
    )
