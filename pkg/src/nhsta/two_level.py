"""Decaying two-level atom driven by an Allen-Eberly pulse, with and without RWA.

Basis ordering is (|1>, |2>) with |2> the decaying excited state. All
matrix builders broadcast over a time array and return ``(..., 2, 2)``.

Angle conventions
-----------------
``MixingAngle.beta`` is the eigenvector angle: the right eigenstates are
``(sin b, cos b e^{i wL t})`` and ``(cos b e^{-i wL t}, -sin b)`` with
``tan 2b = n / (Delta - i Gamma/2)``. The closed-form counterdiabatic matrix
is written in terms of the doubled angle ``2b`` (the rotation angle of the
Bloch vector); :func:`cd_beyond_rwa` performs that doubling so that it agrees
with the biorthogonal sum in :func:`cd_general`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ExceptionalPoint, SingularAngle
from .pulses import AeParams, PulseSample, ae_drive, dress_counter_rotating

_BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class TwoLevelParams:
    gamma: float
    omegaL: float
    ae: AeParams
    counter_rotating: bool = True

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigError("gamma", "must be >= 0")
        if not self.omegaL >= 0:
            raise ConfigError("omegaL", "must be >= 0")


@dataclass(frozen=True)
class MixingAngle:
    """Complex eigenvector angle, its rate, and the pi/2 branch offset applied."""

    beta: complex | np.ndarray
    beta_dot: complex | np.ndarray
    branch_index: int | np.ndarray = 0


@dataclass(frozen=True)
class BiorthPair2:
    """Right kets and left kets (index 0 -> '+', 1 -> '-'), each shaped ``(..., 2)``.

    The bra of a left ket is its complex conjugate, so ``<left_m|right_n>``
    is ``np.sum(left[m].conj() * right[n], -1)``.
    """

    right: tuple[np.ndarray, np.ndarray]
    left: tuple[np.ndarray, np.ndarray]

    def gram(self) -> np.ndarray:
        g = np.empty(np.shape(self.right[0])[:-1] + (2, 2), dtype=complex)
        for m in range(2):
            for n in range(2):
                g[..., m, n] = np.sum(np.conj(self.left[m]) * self.right[n], axis=-1)
        return g


def _mat2(a, b, c, d) -> np.ndarray:
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def coupling(t, p: TwoLevelParams) -> tuple[PulseSample, PulseSample]:
    """Return ``(Omega, Delta)``: the (dressed if CR) coupling and the detuning."""
    rabi, det = ae_drive(t, p.ae)
    if p.counter_rotating:
        rabi = dress_counter_rotating(rabi, p.omegaL, t)
    return rabi, det


def hamiltonian(t, p: TwoLevelParams) -> np.ndarray:
    """Reference Hamiltonian ``(1/2)[[-D, W], [W, D - iG]]`` (complex symmetric)."""
    omega, det = coupling(t, p)
    w = omega.value
    return 0.5 * _mat2(-det.value, w, w, det.value - 1j * p.gamma)


def complex_arctan(z):
    """Principal-branch arctan, ``log((1 + iz) / (1 - iz)) / 2i``."""
    z = np.asarray(z, dtype=complex)
    return np.log((1.0 + 1j * z) / (1.0 - 1j * z)) / 2j


def _angle_terms(t, p: TwoLevelParams):
    """Numerator ``n`` and denominator ``d`` of the arctan argument, with rates."""
    t = np.asarray(t, dtype=float)
    rabi, det = ae_drive(t, p.ae)
    if p.counter_rotating:
        c = np.cos(p.omegaL * t)
        s = np.sin(p.omegaL * t)
        n = 2.0 * rabi.value * c
        n_dot = 2.0 * rabi.derivative * c - 2.0 * rabi.value * p.omegaL * s
    else:
        n = rabi.value
        n_dot = rabi.derivative
    d = det.value - 0.5j * p.gamma
    d_dot = det.derivative  # Gamma is constant
    return n, n_dot, d, d_dot


def _principal_angle(t, p: TwoLevelParams):
    n, n_dot, d, d_dot = _angle_terms(t, p)
    n, d = np.broadcast_arrays(n, d)
    denom = n**2 + d**2
    scale = np.abs(n) ** 2 + np.abs(d) ** 2
    bad = (np.abs(denom) <= _BRANCH_TOL * scale) & (scale > 0)
    if np.any(bad):
        where = np.atleast_1d(np.asarray(t, dtype=float) * np.ones(bad.shape))[np.atleast_1d(bad)]
        raise SingularAngle("mixing-angle argument at arctan branch point", float(where[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(d != 0, n / np.where(d != 0, d, 1.0), 0.0)
        beta = 0.5 * complex_arctan(u)
        beta = np.where(d != 0, beta, np.where(n != 0, np.pi / 4 * np.sign(n.real + (n.real == 0)), 0.0))
        beta_dot = np.where(scale > 0, (n_dot * d - n * d_dot) / (2.0 * np.where(scale > 0, denom, 1.0)), 0.0)
    return beta, beta_dot


def mixing_angle(t: float, p: TwoLevelParams, prev: MixingAngle | None = None) -> MixingAngle:
    """Mixing angle at a single time, shifted by multiples of pi/2 to stay near ``prev``.

    Raises
    ------
    SingularAngle
        If ``n^2 + d^2`` vanishes (the arctan argument hits ``+-i``).
    """
    beta, beta_dot = _principal_angle(t, p)
    beta = complex(beta)
    k = 0
    if prev is not None:
        k = int(np.round((np.real(prev.beta) - beta.real) / (np.pi / 2)))
    return MixingAngle(beta + k * np.pi / 2, complex(beta_dot), k)


def mixing_angle_series(times, p: TwoLevelParams, prev: MixingAngle | None = None) -> MixingAngle:
    """Vectorised :func:`mixing_angle` along a monotone time grid with branch unwrapping."""
    times = np.asarray(times, dtype=float)
    beta, beta_dot = _principal_angle(times, p)
    re = beta.real
    if prev is not None:
        re_full = np.unwrap(np.concatenate([[np.real(prev.beta)], re]), period=np.pi / 2)[1:]
    else:
        re_full = np.unwrap(re, period=np.pi / 2)
    k = np.round((re_full - re) / (np.pi / 2)).astype(int)
    return MixingAngle(beta + k * np.pi / 2, beta_dot, k)


def eigenstates(angle: MixingAngle, omegaL: float, t) -> BiorthPair2:
    """Biorthogonal eigenstates; the left kets use ``conj(beta)``."""
    b = np.asarray(angle.beta, dtype=complex)
    ph = np.exp(1j * omegaL * np.asarray(t, dtype=float))
    right = (
        np.stack(np.broadcast_arrays(np.sin(b), np.cos(b) * ph), axis=-1),
        np.stack(np.broadcast_arrays(np.cos(b) / ph, -np.sin(b)), axis=-1),
    )
    bc = np.conj(b)
    left = (
        np.stack(np.broadcast_arrays(np.sin(bc), np.cos(bc) * ph), axis=-1),
        np.stack(np.broadcast_arrays(np.cos(bc) / ph, -np.sin(bc)), axis=-1),
    )
    return BiorthPair2(right, left)


def eigenstate_derivatives(angle: MixingAngle, omegaL: float, t) -> tuple[np.ndarray, np.ndarray]:
    """Analytic time derivatives of the right eigenstates."""
    b = np.asarray(angle.beta, dtype=complex)
    bd = np.asarray(angle.beta_dot, dtype=complex)
    ph = np.exp(1j * omegaL * np.asarray(t, dtype=float))
    s, c = np.sin(b), np.cos(b)
    d_plus = np.stack(np.broadcast_arrays(bd * c, (-bd * s + 1j * omegaL * c) * ph), axis=-1)
    d_minus = np.stack(np.broadcast_arrays((-bd * s - 1j * omegaL * c) / ph, -bd * c), axis=-1)
    return d_plus, d_minus


def cd_general(pair: BiorthPair2, pair_dot, omegaL: float = 0.0, t=0.0) -> np.ndarray:
    """Counterdiabatic term ``i sum_n (|dn><n^| - <n^|dn> |n><n^|)``.

    ``omegaL`` and ``t`` are accepted for signature symmetry with
    :func:`cd_beyond_rwa`; the carrier phase is already inside the states.
    """
    out = 0.0
    for n in range(2):
        ket = pair.right[n]
        bra = np.conj(pair.left[n])
        dket = pair_dot[n]
        overlap = np.sum(bra * dket, axis=-1)[..., None, None]
        out = out + dket[..., :, None] * bra[..., None, :] - overlap * ket[..., :, None] * bra[..., None, :]
    return 1j * out


def cd_closed_form(angle, angle_dot, omegaL: float, t) -> np.ndarray:
    """Closed-form counterdiabatic matrix in terms of the Bloch rotation angle.

    ``angle`` is the full rotation angle (twice the eigenvector angle).
    Diagonal ``+-(wL/2) sin^2 a``; off-diagonals
    ``(+-i a'/2 + (wL/4) sin 2a) e^{-+i wL t}``.
    """
    a = np.asarray(angle, dtype=complex)
    ad = np.asarray(angle_dot, dtype=complex)
    ph = np.exp(1j * omegaL * np.asarray(t, dtype=float))
    diag = 0.5 * omegaL * np.sin(a) ** 2
    shear = 0.25 * omegaL * np.sin(2.0 * a)
    return _mat2(diag, (0.5j * ad + shear) / ph, (-0.5j * ad + shear) * ph, -diag)


def cd_beyond_rwa(angle: MixingAngle, omegaL: float, t) -> np.ndarray:
    """Beyond-RWA counterdiabatic matrix for the eigenvector angle ``angle.beta``."""
    return cd_closed_form(2.0 * np.asarray(angle.beta), 2.0 * np.asarray(angle.beta_dot), omegaL, t)


def theta_dot_rwa(t, p: TwoLevelParams):
    """Rate of the RWA mixing angle ``tan(theta) = Omega_R / (Delta - i Gamma/2)``."""
    rabi, det = ae_drive(t, p.ae)
    d = det.value - 0.5j * p.gamma
    d_dot = det.derivative - 0.5j * 0.0  # constant loss rate
    denom = rabi.value**2 + d**2
    scale = np.abs(rabi.value) ** 2 + np.abs(d) ** 2
    bad = (np.abs(denom) <= _BRANCH_TOL * scale) & (scale > 0)
    if np.any(bad):
        where = np.atleast_1d(np.asarray(t, dtype=float) * np.ones(np.shape(bad)))[np.atleast_1d(bad)]
        raise ExceptionalPoint("Omega_R^2 + (Delta - i Gamma/2)^2 vanishes", float(where[0]))
    num = rabi.derivative * d - rabi.value * d_dot
    return np.where(scale > 0, num / np.where(scale > 0, denom, 1.0), 0.0)


def cd_rwa(t, p: TwoLevelParams) -> tuple[np.ndarray, np.ndarray]:
    """RWA auxiliary field ``Omega_a = i theta'/2`` and ``[[0, Wa], [-Wa, 0]]``."""
    omega_a = 0.5j * theta_dot_rwa(t, p)
    zero = np.zeros_like(omega_a)
    return omega_a, _mat2(zero, omega_a, -omega_a, zero)


def imag_only_approximation(omega_a):
    """Keep only the imaginary part: ``i Im(Omega_a)``."""
    return 1j * np.imag(omega_a)


def eigen_residual(t, p: TwoLevelParams, angle: MixingAngle | None = None) -> np.ndarray:
    """Diagnostic ``||H|phi_n> - lambda_n|phi_n>||`` for the analytic right states.

    ``lambda_n`` is the Rayleigh-like quotient ``<phi^_n|H|phi_n>``. Shape
    ``(..., 2)`` for the '+' and '-' states. Nonzero with CR terms on.
    """
    if angle is None:
        angle = mixing_angle_series(np.atleast_1d(t), p)
    omegaL = p.omegaL if p.counter_rotating else 0.0
    pair = eigenstates(angle, omegaL, t)
    h = hamiltonian(t, p)
    out = []
    for n in range(2):
        hv = np.einsum("...ij,...j->...i", h, pair.right[n])
        lam = np.sum(np.conj(pair.left[n]) * hv, axis=-1)
        out.append(np.linalg.norm(hv - lam[..., None] * pair.right[n], axis=-1))
    return np.stack(out, axis=-1)


CD_VARIANTS = ("none", "rwa", "beyond_rwa")


class TwoLevelDrive:
    """Total Hamiltonian ``H_ref + H_CD`` evaluated on monotone time grids.

    Keeps the last mixing angle so that successive calls continue the same
    branch; call :meth:`reset` before reusing it for a new trajectory.
    """

    def __init__(self, params: TwoLevelParams, cd: str = "none", imag_only: bool = False, dress_cd: bool = False):
        if cd not in CD_VARIANTS:
            raise ConfigError("cd", f"unknown two-level variant {cd!r}")
        self.params = params
        self.cd = cd
        self.imag_only = imag_only
        self.dress_cd = dress_cd
        self._last: MixingAngle | None = None

    def reset(self):
        self._last = None

    def cd_matrix(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        p = self.params
        if self.cd == "rwa":
            omega_a, mat = cd_rwa(times, p)
            if self.imag_only:
                wa = imag_only_approximation(omega_a)
                mat = _mat2(np.zeros_like(wa), wa, -wa, np.zeros_like(wa))
            if self.dress_cd and p.counter_rotating:
                # same carrier factor as the reference coupling, on both off-diagonals
                mat = mat * (1.0 + np.exp(-2j * p.omegaL * times))[..., None, None]
            return mat
        if self.cd == "beyond_rwa":
            angle = mixing_angle_series(times, p, self._last)
            self._last = MixingAngle(angle.beta[-1], angle.beta_dot[-1], int(angle.branch_index[-1]))
            omegaL = p.omegaL if p.counter_rotating else 0.0
            return cd_beyond_rwa(angle, omegaL, times)
        return np.zeros(times.shape + (2, 2), dtype=complex)

    def __call__(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return hamiltonian(times, self.params) + self.cd_matrix(times)

    def max_frequency(self) -> float:
        """Fastest angular frequency present, used to bound the step size."""
        p = self.params
        ae = p.ae
        chirp = 2.0 * ae.delta**2 * ae.t0 / np.pi
        rabi_peak = ae.omega0 * (2.0 if p.counter_rotating else 1.0)
        envelope = np.pi / (2.0 * ae.t0)  # sech/tanh time scale
        rates = [abs(chirp), rabi_peak, p.gamma, envelope]
        if p.counter_rotating:
            rates.append(2.0 * p.omegaL)
        if self.cd != "none":
            t = np.linspace(0.0, ae.tf, 2001)
            rates.append(float(np.max(np.abs(self.cd_matrix(t)))) * 2.0)
            self.reset()
        return max(rates)
