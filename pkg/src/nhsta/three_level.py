"""Decaying Lambda system (|1> -pump- |2> -Stokes- |3>) beyond the RWA.

State ordering is (|1>, |2>, |3>); |2> decays at rate ``gamma``. The
eigensystem, projectors and counterdiabatic terms assume two-photon
resonance (``deltaP == deltaS``). Everything broadcasts over a time array
and returns ``(..., 3, 3)`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDark, ExceptionalPoint
from .pulses import GaussianPairParams, PulseSample, dress_counter_rotating, gaussian_pair

_EP_TOL = 1e-10
# CD is switched off where the dark-state normaliser drops below this * omega0.
TAIL_CUTOFF = 1e-8


@dataclass(frozen=True)
class ThreeLevelParams:
    gamma: float
    deltaP: float
    deltaS: float
    omegaP: float
    omegaS: float
    pulses: GaussianPairParams
    counter_rotating: bool = True

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigError("gamma", "must be >= 0")

    @property
    def resonant(self) -> bool:
        return self.deltaP == self.deltaS

    def require_resonance(self):
        if not self.resonant:
            raise ConfigError("deltaS", "eigensystem operations need two-photon resonance (deltaP == deltaS)")


@dataclass(frozen=True)
class Eigensystem3:
    """Right/left eigenkets ordered (dark, +, -), each ``(..., 3)``.

    Left kets are scaled so that ``<left_j|right_k> = delta_jk``; the
    corresponding bra is ``conj(left_j)``.
    """

    right: tuple[np.ndarray, np.ndarray, np.ndarray]
    left: tuple[np.ndarray, np.ndarray, np.ndarray]
    eps: tuple[np.ndarray, np.ndarray]
    eps_hat: tuple[np.ndarray, np.ndarray]
    xi: tuple[np.ndarray, np.ndarray, np.ndarray]
    pump: np.ndarray
    stokes: np.ndarray
    root_sign: np.ndarray

    @property
    def energies(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.zeros_like(self.eps[0]), 0.5 * self.eps[0], 0.5 * self.eps[1]

    def gram(self) -> np.ndarray:
        g = np.empty(np.shape(self.right[0])[:-1] + (3, 3), dtype=complex)
        for j in range(3):
            for k in range(3):
                g[..., j, k] = np.sum(np.conj(self.left[j]) * self.right[k], axis=-1)
        return g


@dataclass(frozen=True)
class ProjectorSet3:
    pi0: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray

    def __iter__(self):
        return iter((self.pi0, self.pi1, self.pi2))


def drives(t, p: ThreeLevelParams) -> tuple[PulseSample, PulseSample]:
    """Pump and Stokes couplings, dressed by the carrier when CR terms are on."""
    pump, stokes = gaussian_pair(t, p.pulses)
    if p.counter_rotating:
        pump = dress_counter_rotating(pump, p.omegaP, t)
        stokes = dress_counter_rotating(stokes, p.omegaS, t)
    return pump, stokes


def _mat3(rows) -> np.ndarray:
    flat = np.broadcast_arrays(*[np.asarray(x, dtype=complex) for row in rows for x in row])
    return np.stack(flat, axis=-1).reshape(flat[0].shape + (3, 3))


def hamiltonian(t, p: ThreeLevelParams) -> np.ndarray:
    """``(1/2)[[0, P, 0], [P*, 2Dp - iG, S], [0, S*, 2(Dp - Ds)]]``; accepts Dp != Ds."""
    pump, stokes = drives(t, p)
    P, S = pump.value, stokes.value
    z = np.zeros_like(P)
    mid = np.full_like(P, 2.0 * p.deltaP - 1j * p.gamma)
    last = np.full_like(P, 2.0 * (p.deltaP - p.deltaS))
    return 0.5 * _mat3([[z, P, z], [np.conj(P), mid, S], [z, np.conj(S), last]])


def hamiltonian_dot(t, p: ThreeLevelParams) -> np.ndarray:
    """Analytic time derivative of :func:`hamiltonian` (detunings and loss constant)."""
    pump, stokes = drives(t, p)
    Pd, Sd = pump.derivative, stokes.derivative
    z = np.zeros_like(Pd)
    return 0.5 * _mat3([[z, Pd, z], [np.conj(Pd), z, Sd], [z, np.conj(Sd), z]])


def _continuous_sign(root: np.ndarray, prev_root: complex | None) -> np.ndarray:
    """Signs (+-1) making ``sign * root`` continuous along the leading axis."""
    root = np.atleast_1d(root)
    ref = np.concatenate([[prev_root if prev_root is not None else root[0]], root])
    flips = np.real(np.conj(ref[1:]) * ref[:-1]) < 0
    # flip parity accumulates: each flip toggles relative to the previous point
    sign = np.where(np.cumsum(flips) % 2 == 1, -1.0, 1.0)
    return sign


def eigensystem(t, p: ThreeLevelParams, prev: Eigensystem3 | None = None, track: bool = True) -> Eigensystem3:
    """Biorthogonal eigensystem along ``t``.

    With ``track`` the square-root branch of ``eps_+-`` is continued along
    the (monotone) time array, starting from ``prev`` when given; otherwise
    the principal branch is used pointwise.

    Raises
    ------
    ExceptionalPoint
        ``(D - iG/2)^2 + Xi0^2`` vanishes (bright eigenvalues coalesce) or a
        bright normaliser ``Xi_{1,2}`` vanishes.
    DegenerateDark
        Both couplings vanish.
    """
    p.require_resonance()
    t_arr = np.asarray(t, dtype=float)
    pump, stokes = drives(t_arr, p)
    P, S = pump.value, stokes.value
    xi0_sq = np.abs(P) ** 2 + np.abs(S) ** 2
    xi0 = np.sqrt(xi0_sq)
    floor = np.finfo(float).eps * p.pulses.omega0
    if np.any(xi0 <= floor):
        bad = np.atleast_1d(t_arr * np.ones(np.shape(xi0)))[np.atleast_1d(xi0 <= floor)]
        raise DegenerateDark("pump and Stokes couplings both vanish", float(bad[0]))
    a = p.deltaP - 0.5j * p.gamma
    disc = a**2 + xi0_sq
    scale = np.abs(a) ** 2 + xi0_sq
    if np.any(np.abs(disc) <= _EP_TOL * scale):
        bad = np.atleast_1d(t_arr * np.ones(np.shape(disc)))[np.atleast_1d(np.abs(disc) <= _EP_TOL * scale)]
        raise ExceptionalPoint("bright eigenvalues coalesce", float(bad[0]))
    root = np.sqrt(disc)
    if track and np.ndim(root) > 0:
        prev_root = None
        if prev is not None:
            prev_root = complex(np.ravel(prev.eps[0])[-1] - a)
        sign = _continuous_sign(root, prev_root).reshape(np.shape(root))
    else:
        sign = np.ones(np.shape(root))
    root = sign * root
    eps_p, eps_m = a + root, a - root
    # the smaller root loses digits to cancellation; recover it from eps_p * eps_m = -xi0^2
    small_p = np.abs(eps_p) < np.abs(eps_m)
    eps_p = np.where(small_p, -xi0_sq / eps_m, eps_p)
    eps_m = np.where(small_p, eps_m, -xi0_sq / eps_p)
    xi1 = np.sqrt(eps_p**2 + xi0_sq)
    xi2 = np.sqrt(eps_m**2 + xi0_sq)
    if np.any(np.abs(xi1) ** 2 <= _EP_TOL * scale) or np.any(np.abs(xi2) ** 2 <= _EP_TOL * scale):
        raise ExceptionalPoint("bright-state normaliser vanishes", float(np.ravel(t_arr)[0]))
    z = np.zeros_like(P)
    dark = np.stack(np.broadcast_arrays(S, z, -np.conj(P)), axis=-1) / xi0[..., None]
    bright_p = np.stack(np.broadcast_arrays(P, eps_p, np.conj(S)), axis=-1)
    bright_m = np.stack(np.broadcast_arrays(P, eps_m, np.conj(S)), axis=-1)
    eps_hat_p, eps_hat_m = np.conj(eps_p), np.conj(eps_m)
    left_p = np.stack(np.broadcast_arrays(P, eps_hat_p, np.conj(S)), axis=-1)
    left_m = np.stack(np.broadcast_arrays(P, eps_hat_m, np.conj(S)), axis=-1)
    return Eigensystem3(
        right=(dark, bright_p / xi1[..., None], bright_m / xi2[..., None]),
        left=(dark, left_p / np.conj(xi1)[..., None], left_m / np.conj(xi2)[..., None]),
        eps=(eps_p, eps_m),
        eps_hat=(eps_hat_p, eps_hat_m),
        xi=(xi0, xi1, xi2),
        pump=P,
        stokes=S,
        root_sign=sign,
    )


def unscaled_left_pairing(es: Eigensystem3) -> np.ndarray:
    """``<E^_n|E_n>`` when the left kets carry the same ``1/Xi`` as the right ones.

    Equals ``Xi_n^2 / |Xi_n|^2`` for the bright states, i.e. a pure phase that
    is 1 only when ``Xi_n`` is real. Shape ``(..., 3)``.
    """
    out = []
    for n in range(3):
        xi = es.xi[n]
        out.append(np.sum(np.conj(es.left[n]) * es.right[n], axis=-1) * np.conj(xi) / xi)
    return np.stack(out, axis=-1)


def projectors(es: Eigensystem3) -> ProjectorSet3:
    """Oblique projectors ``|E_j><E^_j|``."""
    mats = [r[..., :, None] * np.conj(l)[..., None, :] for r, l in zip(es.right, es.left)]
    return ProjectorSet3(*mats)


def cd_projector_formula(t, p: ThreeLevelParams, es: Eigensystem3, ps: ProjectorSet3, h0dot: np.ndarray) -> np.ndarray:
    """``i sum_{j != k} P_j dH P_k / (E_k - E_j)``."""
    energies = es.energies
    scale = np.abs(p.deltaP - 0.5j * p.gamma) + es.xi[0]
    pis = list(ps)
    out = np.zeros(np.shape(h0dot), dtype=complex)
    for j in range(3):
        left = pis[j] @ h0dot
        for k in range(3):
            if j == k:
                continue
            gap = energies[k] - energies[j]
            if np.any(np.abs(gap) <= _EP_TOL * scale):
                raise ExceptionalPoint("eigenvalue gap closes in projector formula", float(np.ravel(t)[0]))
            out += (left @ pis[k]) / gap[..., None, None]
    return 1j * out


def closed_form_coefficients(t, p: ThreeLevelParams, es: Eigensystem3) -> dict[str, np.ndarray]:
    """Coefficient functions ``A``..``G`` of the closed form, ``H.C.`` read as ``conj``."""
    pump, stokes = drives(t, p)
    P, S = pump.value, stokes.value
    Pd, Sd = pump.derivative, stokes.derivative
    Pc, Sc, Pdc, Sdc = np.conj(P), np.conj(S), np.conj(Pd), np.conj(Sd)
    delta = p.deltaP
    xi0_sq = es.xi[0] ** 2
    A = (2 * delta - 1j * p.gamma) * (Pc * Pd + S * Sdc)
    b = Pc * Pdc + S * Sdc
    B = b - np.conj(b)
    C = (np.abs(es.eps[0]) ** 2 + np.abs(es.eps[1]) ** 2 + 2 * xi0_sq) / xi0_sq
    d1 = Sc * Sdc
    d2 = Pc * Pd
    D = np.abs(P) ** 2 * (d1 - np.conj(d1)) + np.abs(S) ** 2 * (d2 - np.conj(d2))
    F = P**2 * (S * Pdc - Pc * Sdc) + S**2 * (Sc * Pd - P * Sdc)
    G = Sc * Pd - P * Sdc
    return {"A": A, "B": B, "C": C, "D": D, "F": F, "G": G}


def cd_closed_form(t, p: ThreeLevelParams, es: Eigensystem3) -> np.ndarray:
    """The closed-form counterdiabatic matrix, evaluated term by term."""
    c = closed_form_coefficients(t, p, es)
    A, B, C, D, F, G = (c[k] for k in "ABCDFG")
    P, S = es.pump, es.stokes
    Pc, Sc = np.conj(P), np.conj(S)
    g = p.gamma
    m = _mat3(
        [
            [np.abs(P) ** 2 * B + C * D, P * A - 2j * g * S * G, P * S * B + C * F],
            [-Pc * np.conj(A) - 2j * g * Sc * np.conj(G), -es.xi[0] ** 2 * B, -S * np.conj(A) - 2j * g * P * np.conj(G)],
            [-Pc * Sc * np.conj(B) - C * np.conj(F), Sc * A + 2j * g * Pc * G, np.abs(S) ** 2 * B - C * D],
        ]
    )
    pref = 1j / (es.xi[1] ** 2 * es.xi[2] ** 2)
    return pref[..., None, None] * m


def rwa_angles(t, p: ThreeLevelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(theta, theta_dot, phi_dot)`` from the undressed pulses."""
    pump, stokes = gaussian_pair(t, p.pulses)
    Wp, Ws = pump.value.real, stokes.value.real
    Wpd, Wsd = pump.derivative.real, stokes.derivative.real
    w2 = Wp**2 + Ws**2
    if np.any(w2 == 0):
        raise DegenerateDark("RWA couplings both vanish", float(np.ravel(t)[0]))
    w = np.sqrt(w2)
    wd = (Wp * Wpd + Ws * Wsd) / w
    theta = np.arctan2(Wp, Ws)
    theta_dot = (Wpd * Ws - Wsd * Wp) / w2
    a = p.deltaP - 0.5j * p.gamma
    denom = w2 + a**2
    if np.any(np.abs(denom) <= _EP_TOL * (w2 + np.abs(a) ** 2)):
        raise ExceptionalPoint("Omega'^2 + (Dp - iG/2)^2 vanishes", float(np.ravel(t)[0]))
    # detuning and loss rate are constant, so only the amplitude term survives
    phi_dot = wd * a / (2.0 * denom)
    return theta, theta_dot, phi_dot


def cd_rwa(t, p: ThreeLevelParams) -> np.ndarray:
    """RWA auxiliary driving ``i[[0, A, C], [-A, 0, -B], [-C, B, 0]]``."""
    theta, theta_dot, phi_dot = rwa_angles(t, p)
    A = np.sin(theta) * phi_dot
    B = np.cos(theta) * phi_dot
    C = theta_dot.astype(complex)
    z = np.zeros_like(A)
    return 1j * _mat3([[z, A, C], [-A, z, -B], [-C, B, z]])


def dress_rwa_cd(m: np.ndarray, t, p: ThreeLevelParams) -> np.ndarray:
    """Give the RWA auxiliary couplings the carrier factors of the transitions they drive.

    ``1-2`` uses the pump carrier, ``2-3`` the Stokes carrier and ``1-3`` the
    two-photon combination; both off-diagonal partners receive the same factor,
    as in the reference couplings.
    """
    t = np.asarray(t, dtype=float)
    fp = 1.0 + np.exp(-2j * p.omegaP * t)
    fs = 1.0 + np.exp(-2j * p.omegaS * t)
    out = np.array(m, copy=True)
    out[..., 0, 1] *= fp
    out[..., 1, 0] *= np.conj(fp)
    out[..., 1, 2] *= fs
    out[..., 2, 1] *= np.conj(fs)
    out[..., 0, 2] *= fp * np.conj(fs)
    out[..., 2, 0] *= np.conj(fp) * fs
    return out


def eigen_residuals(t, p: ThreeLevelParams, es: Eigensystem3 | None = None) -> np.ndarray:
    """``||H|E_n> - E_n|E_n>||`` for n = dark, +, -; shape ``(..., 3)``."""
    es = es if es is not None else eigensystem(t, p)
    h = hamiltonian(t, p)
    out = []
    for vec, en in zip(es.right, es.energies):
        hv = np.einsum("...ij,...j->...i", h, vec)
        out.append(np.linalg.norm(hv - en[..., None] * vec, axis=-1))
    return np.stack(out, axis=-1)


CD_VARIANTS = ("none", "rwa", "projector", "closed_form")


class ThreeLevelDrive:
    """``H_ref + H_CD`` on monotone time grids, tracking the eps branch across calls.

    Points where the dark-state normaliser falls below ``TAIL_CUTOFF * omega0``
    get no counterdiabatic term. For the ``projector`` variant the largest
    relative deviation of the closed form is recorded in
    ``max_cd_discrepancy`` when ``compare`` is set.
    """

    def __init__(self, params: ThreeLevelParams, cd: str = "projector", dress_cd: bool = False, compare: bool = False):
        if cd not in CD_VARIANTS:
            raise ConfigError("cd", f"unknown three-level variant {cd!r}")
        if cd in ("projector", "closed_form"):
            params.require_resonance()
        self.params = params
        self.cd = cd
        self.dress_cd = dress_cd
        self.compare = compare
        self.max_cd_discrepancy = 0.0
        self._last: Eigensystem3 | None = None

    def reset(self):
        self._last = None
        self.max_cd_discrepancy = 0.0

    def cd_matrix(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        p = self.params
        out = np.zeros(times.shape + (3, 3), dtype=complex)
        if self.cd == "none":
            return out
        if self.cd == "rwa":
            m = cd_rwa(times, p)
            return dress_rwa_cd(m, times, p) if self.dress_cd else m
        pump, stokes = drives(times, p)
        xi0 = np.sqrt(np.abs(pump.value) ** 2 + np.abs(stokes.value) ** 2)
        live = xi0 >= TAIL_CUTOFF * p.pulses.omega0
        if not np.any(live):
            return out
        tl = times[live]
        es = eigensystem(tl, p, prev=self._last)
        self._last = _tail(es)
        if self.cd == "closed_form":
            out[live] = cd_closed_form(tl, p, es)
            return out
        proj = cd_projector_formula(tl, p, es, projectors(es), hamiltonian_dot(tl, p))
        out[live] = proj
        if self.compare:
            closed = cd_closed_form(tl, p, es)
            ref = np.max(np.abs(proj), axis=(-2, -1))
            dev = np.max(np.abs(closed - proj), axis=(-2, -1)) / np.where(ref > 0, ref, 1.0)
            finite = np.isfinite(dev)
            if np.any(finite):
                self.max_cd_discrepancy = max(self.max_cd_discrepancy, float(np.max(dev[finite])))
        return out

    def __call__(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return hamiltonian(times, self.params) + self.cd_matrix(times)

    def max_frequency(self) -> float:
        p = self.params
        factor = 2.0 if p.counter_rotating else 1.0
        envelope = 2.0 / p.pulses.T  # Gaussian time scale
        rates = [factor * p.pulses.omega0, abs(p.deltaP), abs(p.deltaS), p.gamma, envelope]
        if p.counter_rotating:
            rates += [2.0 * p.omegaP, 2.0 * p.omegaS]
        if self.cd != "none":
            t = np.linspace(0.0, p.pulses.tf, 2001)
            compare, self.compare = self.compare, False
            rates.append(2.0 * float(np.max(np.abs(self.cd_matrix(t)))))
            self.compare = compare
            self.reset()
        return max(rates)


def _tail(es: Eigensystem3) -> Eigensystem3:
    """Keep only the last time point (enough to seed branch continuity)."""

    def last(x):
        return np.asarray(x)[-1:]

    return Eigensystem3(
        right=tuple(last(r) for r in es.right),
        left=tuple(last(r) for r in es.left),
        eps=tuple(last(e) for e in es.eps),
        eps_hat=tuple(last(e) for e in es.eps_hat),
        xi=tuple(last(x) for x in es.xi),
        pump=last(es.pump),
        stokes=last(es.stokes),
        root_sign=last(es.root_sign),
    )
