"""Effective two-level model of the Lambda system at large single-photon detuning.

Eliminating the excited amplitude (``dc2/dt = 0``) gives

    c2 = -(conj(P) c1 + S c3) / (2 Delta - i Gamma)

and, after dropping the common Stark shift ``-(|P|^2 + |S|^2) / (4(2 Delta - i Gamma))``,
a traceless 2x2 Hamiltonian on (|1>, |3>) with

    Delta_eff = (|P|^2 - |S|^2) / (4 Delta - 2i Gamma)
    Omega_eff = -P S / (2 Delta - i Gamma)

That is the ``standard`` variant. The ``as_printed`` variant swaps the roles:
``Delta_eff = -P P / (2 Delta - i Gamma)`` and
``Omega_eff = (|P|^2 - |S|^2) / (4 Delta - 2i Gamma)``. Both are kept so a
full three-level propagation can arbitrate between them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ExceptionalPoint
from .pulses import PulseSample
from .three_level import ThreeLevelParams, drives

VARIANTS = ("standard", "as_printed")
DEFAULT_VARIANT = "standard"

_M_TOL = 1e-12


@dataclass(frozen=True)
class EffectiveParams:
    base: ThreeLevelParams
    variant: str = DEFAULT_VARIANT

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"expected one of {VARIANTS}, got {self.variant!r}")
        if abs(self.base.deltaP) < 5.0 * self.base.pulses.omega0:
            warnings.warn(
                "single-photon detuning is not large compared with the Rabi amplitude; "
                "adiabatic elimination may be inaccurate",
                stacklevel=2,
            )


def _denominator(p: ThreeLevelParams) -> complex:
    den = 2.0 * p.deltaP - 1j * p.gamma
    if abs(den) == 0:
        raise ExceptionalPoint("2 Delta - i Gamma vanishes")
    return den


def effective_couplings(t, p: EffectiveParams) -> tuple[PulseSample, PulseSample]:
    """Return ``(delta_eff, omega_eff)`` with analytic derivatives."""
    base = p.base
    den = _denominator(base)
    pump, stokes = drives(t, base)
    P, Pd = pump.value, pump.derivative
    S, Sd = stokes.value, stokes.derivative
    diff = (np.abs(P) ** 2 - np.abs(S) ** 2) / (2.0 * den)
    diff_dot = (np.real(np.conj(P) * Pd) - np.real(np.conj(S) * Sd)) / den
    if p.variant == "standard":
        delta = PulseSample(diff, diff_dot)
        omega = PulseSample(-P * S / den, -(Pd * S + P * Sd) / den)
    else:
        delta = PulseSample(-P * P / den, -2.0 * P * Pd / den)
        omega = PulseSample(diff, diff_dot)
    return delta, omega


def effective_hamiltonian(t, p: EffectiveParams) -> np.ndarray:
    """``(1/2)[[-D_eff, W_eff], [conj(W_eff), D_eff]]`` on (|1>, |3>)."""
    delta, omega = effective_couplings(t, p)
    d, w = np.broadcast_arrays(delta.value, omega.value)
    out = np.empty(d.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = -0.5 * d
    out[..., 0, 1] = 0.5 * w
    out[..., 1, 0] = 0.5 * np.conj(w)
    out[..., 1, 1] = 0.5 * d
    return out


def cd_terms(t, p: EffectiveParams) -> dict[str, np.ndarray]:
    """The ``P``, ``Q`` and ``M`` functions of the effective counterdiabatic term."""
    delta, omega = effective_couplings(t, p)
    D, Dd = delta.value, delta.derivative
    W, Wd = omega.value, omega.derivative
    P = Wd * D - Dd * W
    Q = np.conj(Wd) * W - Wd * np.conj(W)
    M = np.abs(W) ** 2 + D**2
    return {"P": P, "Q": Q, "M": M, "scale": np.abs(W) ** 2 + np.abs(D) ** 2}


def effective_cd(t, p: EffectiveParams) -> np.ndarray:
    """``(i / 2M)[[0, P], [-conj(P), Q]]``.

    Raises
    ------
    ExceptionalPoint
        If ``M = |W_eff|^2 + D_eff^2`` cancels relative to
        ``|W_eff|^2 + |D_eff|^2`` (or both couplings vanish).
    """
    c = cd_terms(t, p)
    M, scale = c["M"], c["scale"]
    bad = np.abs(M) <= _M_TOL * scale
    bad |= scale == 0
    if np.any(bad):
        where = np.atleast_1d(np.asarray(t, dtype=float) * np.ones(np.shape(M)))[np.atleast_1d(bad)]
        raise ExceptionalPoint("effective M(t) vanishes", float(where[0]))
    pref = 0.5j / M
    P, Q = c["P"], c["Q"]
    out = np.zeros(np.shape(M) + (2, 2), dtype=complex)
    out[..., 0, 1] = pref * P
    out[..., 1, 0] = -pref * np.conj(P)
    out[..., 1, 1] = pref * Q
    return out


class EffectiveDrive:
    """``H_eff + H_CD`` (or ``H_eff`` alone when ``cd`` is ``"none"``)."""

    def __init__(self, params: EffectiveParams, cd: str = "effective"):
        if cd not in ("none", "effective"):
            raise ConfigError("cd", f"unknown effective-model variant {cd!r}")
        self.params = params
        self.cd = cd

    def reset(self):
        pass

    def __call__(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        h = effective_hamiltonian(times, self.params)
        if self.cd == "effective":
            h = h + effective_cd(times, self.params)
        return h

    def max_frequency(self) -> float:
        base = self.params.base
        t = np.linspace(0.0, base.pulses.tf, 2001)
        rates = [2.0 * float(np.max(np.abs(self(t)))), 2.0 / base.pulses.T]
        if base.counter_rotating:
            rates += [2.0 * base.omegaP, 2.0 * base.omegaS]
        return max(rates)
