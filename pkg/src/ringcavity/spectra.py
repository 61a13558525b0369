"""Homodyne output-noise spectra of the cavity field.

Fourier convention: u(w) = int u(t) exp(i w t) dt, so the linear system
du/dt = F u + noise becomes u(w) = M(w) noise(w) with M = (-i w I - F)^-1.
Spectra are normalised to shot noise (S = 1 for reflected vacuum).

The output quadrature measured at homodyne angle theta is
X_theta = P_out sin(theta) + Q_out cos(theta), with Q_out = sqrt(gamma0) dQ - Q_in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DriftMatrix, IQ, IP, IY_C, IY_D, ILZ, build_drift
from .params import DerivedParams, PhysicalParams, TWO_PI, bose_occupation
from .steady import SteadyState, working_point

IMAG_TOL = 1e-10


class SpectrumError(ArithmeticError):
    pass


def resolvent(F: DriftMatrix | np.ndarray, omega) -> np.ndarray:
    """M(w) = (-i w I - F)^-1 for a scalar or an array of frequencies (rad/s).

    Returns shape (8, 8) for scalar input, (n, 8, 8) otherwise.
    """
    A = F.entries if isinstance(F, DriftMatrix) else np.asarray(F)
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("omega must be finite")
    n = A.shape[0]
    lhs = -1j * w.reshape(-1, 1, 1) * np.eye(n) - A
    try:
        M = np.linalg.inv(lhs)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"singular resolvent: {exc}") from exc
    return M[0] if w.ndim == 0 else M


@dataclass(frozen=True)
class TransferSet:
    """The nine transfer functions F~_1..F~_9 at one frequency.

    dQ(w) = F2 Q_in + F3 P_in + F5 e_c + F7 e_d + F9 e_phi  (times the noise
    prefactors), dP(w) = F1-type combination + F4 e_c + F6 e_d + F8 e_phi,
    where e_* are the Brownian forces on Y_c, Y_d and L_z.
    """

    omega: float
    Ftilde: np.ndarray
    M: np.ndarray


def transfer(F: DriftMatrix, omega: float) -> TransferSet:
    M = resolvent(F, omega)
    g = F.gamma0
    sg = math.sqrt(g)
    F2 = sg * M[IQ, IQ]
    F3 = -1j * sg * M[IQ, IP]
    F1 = (1j * sg * M[IP, IQ] - F3) / 2
    r2 = math.sqrt(2)
    Ft = np.array([
        F1, F2, F3,
        1j * M[IP, IY_C] / r2, M[IQ, IY_C] / r2,
        1j * M[IP, IY_D] / r2, M[IQ, IY_D] / r2,
        1j * M[IP, ILZ] / r2, M[IQ, ILZ] / r2,
    ])
    return TransferSet(float(omega), Ft, M)


def kappas(F: DriftMatrix, omega) -> np.ndarray:
    """theta-independent coefficients kappa_1..kappa_9, shape (9, n).

    kappa_1..3 carry the cavity input noise, (4,5), (6,7), (8,9) are the
    (P, Q) responses to the side-mode c, side-mode d and mirror forces.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    M = resolvent(F, w)
    g = F.gamma0
    sg = math.sqrt(g)
    return np.array([
        g * M[:, IP, IQ],
        g * M[:, IQ, IQ] - 1,
        g * M[:, IQ, IP],
        sg * M[:, IP, IY_C], sg * M[:, IQ, IY_C],
        sg * M[:, IP, IY_D], sg * M[:, IQ, IY_D],
        sg * M[:, IP, ILZ], sg * M[:, IQ, ILZ],
    ])


def thermal_weight(omega, temperature: float, hbar: float, k_B: float) -> np.ndarray:
    """w (coth(hbar w / 2 k_B T) - 1), the colored Brownian-noise weight.

    Equals 2 w n(w) with n the Bose occupation; the w -> 0 limit is 2 k_B T / hbar
    and T = 0 gives 0 for w > 0 (2|w| for w < 0).
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty_like(w)
    if temperature <= 0:
        out[:] = np.where(w > 0, 0.0, -2 * w)
        return out
    x = hbar * w / (k_B * temperature)
    zero = w == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(zero, 2 * k_B * temperature / hbar, 2 * w / np.expm1(np.where(zero, 1.0, x)))
    return out


@dataclass
class SpectrumResult:
    omega: np.ndarray
    theta: float
    S: np.ndarray
    xi: np.ndarray
    contributions: dict = field(default_factory=dict)
    zero_frequency: bool = False


def _noise_weights(d: DerivedParams, omega, colored: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frequency prefactors of |xi_3|^2, |xi_4|^2, |xi_5|^2."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if colored:
        tw_a = thermal_weight(w, d.temp_atoms, d.hbar, d.k_B)
        tw_m = thermal_weight(w, d.temp_mirror, d.hbar, d.k_B)
        return (2 * d.gamma_m / d.Omega_c * tw_a,
                2 * d.gamma_m / d.Omega_d * tw_a,
                2 * d.gamma_phi / d.omega_phi * tw_m)
    n_c = bose_occupation(d.Omega_c, d.temp_atoms, d.hbar, d.k_B)
    n_d = bose_occupation(d.Omega_d, d.temp_atoms, d.hbar, d.k_B)
    n_m = bose_occupation(d.omega_phi, d.temp_mirror, d.hbar, d.k_B)
    one = np.ones_like(w)
    return (2 * d.gamma_m * (2 * n_c + 1) * one,
            2 * d.gamma_m * (2 * n_d + 1) * one,
            2 * d.gamma_phi * (2 * n_m + 1) * one)


def _spectrum_from_kappas(k: np.ndarray, theta: float, weights, colored: bool):
    s, c = math.sin(theta), math.cos(theta)
    xi = np.array([
        k[0] * s + k[1] * c,
        k[1] * s + k[2] * c,
        k[3] * s + k[4] * c,
        k[5] * s + k[6] * c,
        k[7] * s + k[8] * c,
    ])
    vac = np.abs(xi[0]) ** 2 + np.abs(xi[1]) ** 2
    if colored:
        # commutator part of the input-noise correlator
        cross = 1j * (np.conj(xi[0]) * xi[1] - np.conj(xi[1]) * xi[0])
        scale = np.maximum(np.abs(vac), 1e-300)
        if np.any(np.abs(cross.imag) > IMAG_TOL * scale):
            raise SpectrumError("spectrum has a non-negligible imaginary part")
        vac = vac + cross.real
    th = [weights[i] * np.abs(xi[2 + i]) ** 2 for i in range(3)]
    parts = {"vacuum": vac, "thermal_c": th[0], "thermal_d": th[1], "thermal_mirror": th[2]}
    return vac + th[0] + th[1] + th[2], xi, parts


def homodyne_spectrum(d: DerivedParams, s: SteadyState, omega, theta: float,
                      F: DriftMatrix | None = None) -> SpectrumResult:
    """Output quadrature noise S(w, theta) with coth-colored thermal forces.

    ``omega`` in rad/s (scalar or array), ``theta`` in radians.
    """
    F = build_drift(d, s) if F is None else F
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    k = kappas(F, w)
    S, xi, parts = _spectrum_from_kappas(k, theta, _noise_weights(d, w, True), True)
    return SpectrumResult(w, theta, S, xi, parts, bool(np.any(w == 0)))


def markovian_spectrum(d: DerivedParams, s: SteadyState, omega, theta: float,
                       F: DriftMatrix | None = None) -> SpectrumResult:
    """Symmetrised spectrum driven by the white-noise diffusion matrix.

    This is the regime reproduced by the time-domain oracle: oscillator forces
    are white with strength gamma (2n + 1) and the input-noise commutator term
    is absent.
    """
    F = build_drift(d, s) if F is None else F
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    k = kappas(F, w)
    S, xi, parts = _spectrum_from_kappas(k, theta, _noise_weights(d, w, False), False)
    return SpectrumResult(w, theta, S, xi, parts, bool(np.any(w == 0)))


def angle_coefficients(d: DerivedParams, F: DriftMatrix, omega) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A0, B1, B2) with S(theta) = A0 - B1/2 cos(2 theta) + B2/2 sin(2 theta)."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    k = kappas(F, w)
    weights = _noise_weights(d, w, True)
    A0 = np.zeros(w.shape)
    Ac = np.zeros(w.shape)
    As = np.zeros(w.shape)

    # |a sin + b cos|^2 = (|a|^2+|b|^2)/2 + (|b|^2-|a|^2)/2 cos2t + Re(a* b) sin2t
    def add_square(a, b, wt=1.0):
        nonlocal A0, Ac, As
        A0 = A0 + wt * (np.abs(a) ** 2 + np.abs(b) ** 2) / 2
        Ac = Ac + wt * (np.abs(b) ** 2 - np.abs(a) ** 2) / 2
        As = As + wt * np.real(np.conj(a) * b)

    add_square(k[0], k[1])
    add_square(k[1], k[2])
    for i, wt in enumerate(weights):
        add_square(k[3 + 2 * i], k[4 + 2 * i], wt)
    # commutator term -2 Im(xi1* xi2)
    im11 = np.imag(np.conj(k[0]) * k[1])
    im22 = np.imag(np.conj(k[1]) * k[2])
    im12 = np.imag(np.conj(k[0]) * k[2])
    A0 = A0 - (im11 + im22)
    Ac = Ac - (im22 - im11)
    As = As - im12
    return A0, -2 * Ac, 2 * As


@dataclass
class OptimalAngle:
    theta: float
    S: float
    degenerate: bool


def optimal_angle(d: DerivedParams, s: SteadyState, omega: float,
                  F: DriftMatrix | None = None) -> OptimalAngle:
    """Homodyne angle in [0, pi) minimising S at one frequency."""
    F = build_drift(d, s) if F is None else F
    A0, B1, B2 = (float(x[0]) for x in angle_coefficients(d, F, omega))
    if abs(B1) <= 1e-14 * max(abs(A0), 1e-300) and abs(B2) <= 1e-14 * max(abs(A0), 1e-300):
        return OptimalAngle(0.0, float(homodyne_spectrum(d, s, omega, 0.0, F).S[0]), True)
    t1 = (0.5 * math.atan2(-B2, B1)) % math.pi
    t2 = (t1 + math.pi / 2) % math.pi
    s1 = float(homodyne_spectrum(d, s, omega, t1, F).S[0])
    s2 = float(homodyne_spectrum(d, s, omega, t2, F).S[0])
    return OptimalAngle(t1, s1, False) if s1 <= s2 else OptimalAngle(t2, s2, False)


@dataclass
class OptimizedRow:
    omega: float
    theta_opt: float
    S_opt: float
    degenerate: bool


def optimized_spectrum(d: DerivedParams, s: SteadyState, omega_grid) -> list[OptimizedRow]:
    F = build_drift(d, s)
    rows = []
    for w in np.atleast_1d(np.asarray(omega_grid, dtype=float)):
        oa = optimal_angle(d, s, float(w), F)
        rows.append(OptimizedRow(float(w), oa.theta, oa.S, oa.degenerate))
    return rows


@dataclass
class MirrorResonanceRow:
    winding: float
    omega: float
    theta_opt: float
    S_opt: float
    stable: bool


def mirror_resonance_scan(p: PhysicalParams, winding_values, *, detuning_ratio: float = 1.0) -> list[MirrorResonanceRow]:
    """Optimised squeezing at the mirror frequency as the ring winding number varies.

    Each point is re-derived and re-solved at Delta' = detuning_ratio * omega_phi.
    Unstable points are returned with NaN spectra.
    """
    from .dynamics import stability

    rows = []
    for lp in np.atleast_1d(np.asarray(winding_values, dtype=float)):
        q = p.replace(winding=float(lp))
        w_phi = TWO_PI * q.mirror_freq
        _, d, s = working_point(q, delta_prime=detuning_ratio * w_phi)
        F = build_drift(d, s)
        if not stability(F).stable:
            rows.append(MirrorResonanceRow(float(lp), w_phi, math.nan, math.nan, False))
            continue
        oa = optimal_angle(d, s, w_phi, F)
        rows.append(MirrorResonanceRow(float(lp), w_phi, oa.theta, oa.S, True))
    return rows
