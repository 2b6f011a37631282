"""Non-unitary Schrodinger propagation (hbar = 1) and trajectory observables.

Hamiltonian builders are callables mapping a 1-D array of monotone times to
an ``(N, d, d)`` stack. Builders that track branch continuity keep state
between calls and expose ``reset()``; an optional ``max_frequency()`` lets
the integrator pick its step automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DegenerateDark, NonFinite, StepTooCoarse

HBuilder = Callable[[np.ndarray], np.ndarray]

METHODS = ("rk4", "rk4_adaptive")
MIN_CARRIER_RESOLUTION = 20


@dataclass(frozen=True)
class IntegratorSpec:
    """Integrator settings.

    ``dt`` is the fixed step (``None`` picks ``2 pi / (carrier_resolution * w_max)``);
    for ``rk4_adaptive`` it is the initial step and ``tol`` the per-step
    absolute error target. ``store_points`` caps the number of stored rows.
    """

    method: str = "rk4"
    dt: float | None = None
    carrier_resolution: int = 200
    tol: float = 1e-10
    store_points: int | None = 1000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError("integrator.method", f"expected one of {METHODS}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("integrator.dt", "must be > 0")
        if self.carrier_resolution < MIN_CARRIER_RESOLUTION:
            raise ConfigError("integrator.carrierResolution", f"must be >= {MIN_CARRIER_RESOLUTION}")
        if not self.tol > 0:
            raise ConfigError("integrator.tol", "must be > 0")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def _omega_max(builder, omega_max: float | None) -> float:
    if omega_max is not None:
        return float(omega_max)
    if hasattr(builder, "max_frequency"):
        return float(builder.max_frequency())
    raise ConfigError("integrator.dt", "no dt given and the builder cannot report its fastest frequency")


def _stride(n_steps: int, store_points: int | None) -> int:
    if not store_points:
        return 1
    return max(1, math.ceil(n_steps / store_points))


def _check_finite(times, states):
    finite = np.all(np.isfinite(states), axis=1)
    if not np.all(finite):
        first = int(np.argmin(finite))
        raise NonFinite("state amplitude is not finite", float(times[first]))


def rk4_step_matrices(h_half: np.ndarray, dt: float) -> np.ndarray:
    """One-step RK4 propagators from H sampled on a half-step grid.

    ``h_half`` holds ``2n + 1`` samples at ``t0, t0 + dt/2, ..., t0 + n dt``.
    Returns ``n`` matrices ``U_k`` with ``psi_{k+1} = U_k psi_k``.
    """
    a = -1j * h_half
    a0, a1, a2 = a[0:-1:2], a[1::2], a[2::2]
    eye = np.eye(a.shape[-1], dtype=complex)
    k1 = a0
    k2 = a1 @ (eye + 0.5 * dt * k1)
    k3 = a1 @ (eye + 0.5 * dt * k2)
    k4 = a2 @ (eye + dt * k3)
    return eye + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _evolve_fixed(builder, psi0, tf, spec: IntegratorSpec, omega_max):
    known = omega_max is not None or hasattr(builder, "max_frequency")
    w = _omega_max(builder, omega_max) if (known or spec.dt is None) else None
    if spec.dt is None:
        dt_target = 2.0 * np.pi / (spec.carrier_resolution * w)
    else:
        dt_target = spec.dt
        if w is not None and dt_target > 2.0 * np.pi / (spec.carrier_resolution * w) * (1 + 1e-12):
            raise StepTooCoarse(
                f"dt = {dt_target:.3e} s exceeds 2pi/({spec.carrier_resolution} * {w:.3e} rad/s)", 0.0
            )
    n = max(1, math.ceil(tf / dt_target - 1e-9))
    dt = tf / n
    stride = _stride(n, spec.store_points)
    if hasattr(builder, "reset"):
        builder.reset()
    stored_t = [0.0]
    stored = [np.array(psi0, dtype=complex)]
    psi = stored[0]
    chunk = 20000
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        grid = (np.arange(2 * start, 2 * stop + 1) * 0.5) * dt
        steps = rk4_step_matrices(builder(grid), dt)
        for k, u in enumerate(steps, start=start + 1):
            psi = u @ psi
            if k % stride == 0 or k == n:
                stored_t.append(k * dt)
                stored.append(psi)
        if not np.all(np.isfinite(psi)):
            break
    times = np.array(stored_t)
    states = np.array(stored)
    _check_finite(times, states)
    return times, states, {"dt": dt, "steps": n}


def _evolve_adaptive(builder, psi0, tf, spec: IntegratorSpec, omega_max):
    if spec.dt is not None:
        h = spec.dt
    else:
        h = 2.0 * np.pi / (spec.carrier_resolution * _omega_max(builder, omega_max))
    if hasattr(builder, "reset"):
        builder.reset()
    t = 0.0
    psi = np.array(psi0, dtype=complex)
    times, states = [t], [psi]
    steps = 0
    while t < tf * (1 - 1e-14):
        h = min(h, tf - t)
        grid = t + h * np.arange(5) / 4.0
        hs = builder(grid)
        full = rk4_step_matrices(hs[[0, 2, 4]], h)[0] @ psi
        half = rk4_step_matrices(hs, h / 2)
        two = half[1] @ (half[0] @ psi)
        err = float(np.max(np.abs(two - full))) / 15.0
        if not np.isfinite(err):
            raise NonFinite("state amplitude is not finite", t)
        if err <= spec.tol or h <= tf * 1e-14:
            t += h
            psi = two + (two - full) / 15.0
            times.append(t)
            states.append(psi)
            steps += 1
        factor = 0.9 * (spec.tol / err) ** 0.2 if err > 0 else 4.0
        h *= min(4.0, max(0.1, factor))
    times = np.array(times)
    states = np.array(states)
    if spec.store_points and len(times) > spec.store_points + 1:
        stride = _stride(len(times) - 1, spec.store_points)
        keep = np.unique(np.r_[np.arange(0, len(times), stride), len(times) - 1])
        times, states = times[keep], states[keep]
    _check_finite(times, states)
    return times, states, {"steps": steps}


def evolve(
    builder: HBuilder,
    psi0,
    tf: float,
    spec: IntegratorSpec | None = None,
    omega_max: float | None = None,
    meta: dict | None = None,
) -> Trajectory:
    """Integrate ``i dpsi/dt = H(t) psi`` from 0 to ``tf`` without renormalising.

    Raises
    ------
    StepTooCoarse
        A user ``dt`` does not resolve ``omega_max`` at the requested resolution.
    NonFinite
        An amplitude overflowed; the message carries the time of failure.
    """
    spec = spec or IntegratorSpec()
    psi0 = np.asarray(psi0, dtype=complex)
    if not np.isclose(np.linalg.norm(psi0), 1.0, rtol=0, atol=1e-12):
        raise ConfigError("initialState", "initial state must be normalised")
    if not tf > 0:
        raise ConfigError("tf", "must be > 0")
    if spec.method == "rk4":
        times, states, info = _evolve_fixed(builder, psi0, tf, spec, omega_max)
    else:
        times, states, info = _evolve_adaptive(builder, psi0, tf, spec, omega_max)
    info.update(meta or {})
    return Trajectory(times, states, info)


def populations(tr: Trajectory) -> np.ndarray:
    """``|c_i(t)|^2`` for every stored time, no renormalisation; shape ``(N, d)``."""
    return np.abs(tr.states) ** 2


def fidelity(tr: Trajectory, target: int, normalized: bool = False) -> float:
    """``|<target|psi(tf)>|^2`` with ``target`` a 1-based level number.

    ``normalized`` divides by ``||psi(tf)||^2``; acceptance runs use the raw value.
    """
    if not 1 <= target <= tr.dim:
        raise ConfigError("target", f"level {target} outside 1..{tr.dim}")
    final = tr.final
    f = float(np.abs(final[target - 1]) ** 2)
    if normalized:
        f /= float(np.vdot(final, final).real)
    return f


def dark_state_overlap(tr: Trajectory, p) -> np.ndarray:
    """``|<E^_0(t)|psi(t)>|^2 / ||psi(t)||^2`` along a three-level trajectory."""
    from .three_level import drives

    if tr.dim != 3:
        raise ConfigError("system", "dark-state overlap needs a three-level trajectory")
    pump, stokes = drives(tr.times, p)
    P, S = pump.value, stokes.value
    xi0 = np.sqrt(np.abs(P) ** 2 + np.abs(S) ** 2)
    if np.any(xi0 == 0):
        raise DegenerateDark("dark state undefined", float(tr.times[np.argmin(xi0)]))
    dark = np.stack([S, np.zeros_like(S), -np.conj(P)], axis=1) / xi0[:, None]
    amp = np.sum(np.conj(dark) * tr.states, axis=1)
    return np.abs(amp) ** 2 / np.sum(np.abs(tr.states) ** 2, axis=1)
