"""Linearised fluctuation dynamics: the 8x8 drift matrix and its stability.

State ordering: (dX_c, dY_c, dX_d, dY_d, dQ, dP, dphi, dL_z).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import DerivedParams, PhysicalParams, TWO_PI, derive
from .steady import SteadyState, working_point

STATE_LABELS = ("X_c", "Y_c", "X_d", "Y_d", "Q", "P", "phi", "L_z")
IX_C, IY_C, IX_D, IY_D, IQ, IP, IPHI, ILZ = range(8)


class ProvenanceError(ValueError):
    """Steady state and parameters come from different parameter sets."""


@dataclass(frozen=True)
class DriftMatrix:
    entries: np.ndarray
    Gr: float
    gphi_r: float
    Delta_prime: float
    gamma0: float

    @property
    def shape(self):
        return self.entries.shape


def build_drift(d: DerivedParams, s: SteadyState) -> DriftMatrix:
    if s.params_fingerprint and d.fingerprint and s.params_fingerprint != d.fingerprint:
        raise ProvenanceError(
            f"steady state was solved for params {s.params_fingerprint}, not {d.fingerprint}"
        )
    Gr = math.sqrt(2) * d.G * s.a_s
    gr = math.sqrt(2) * d.g_phi * s.a_s
    Dp = s.Delta_prime
    Oc, Od = d.Omega_c, d.Omega_d
    F = np.zeros((8, 8))
    F[IX_C, IY_C] = Oc
    F[IY_C, IX_C] = -Oc
    F[IY_C, IY_C] = -d.gamma_m
    F[IY_C, IX_D] = -d.calA / Oc
    F[IY_C, IQ] = -d.omegatilde_c * Gr / Oc
    F[IX_D, IY_D] = Od
    F[IY_D, IX_C] = d.calA / Od
    F[IY_D, IX_D] = -Od
    F[IY_D, IY_D] = -d.gamma_m
    F[IY_D, IQ] = -d.omegatilde_d * Gr / Od
    F[IQ, IQ] = -d.gamma0 / 2
    F[IQ, IP] = -Dp
    F[IP, IX_C] = -Gr
    F[IP, IX_D] = -Gr
    F[IP, IQ] = Dp
    F[IP, IP] = -d.gamma0 / 2
    F[IP, IPHI] = -gr
    F[IPHI, ILZ] = d.omega_phi
    F[ILZ, IQ] = -gr
    F[ILZ, IPHI] = -d.omega_phi
    F[ILZ, ILZ] = -d.gamma_phi
    return DriftMatrix(F, Gr, gr, Dp, d.gamma0)


@dataclass(frozen=True)
class Stability:
    stable: bool
    margin: float
    eigenvalues: np.ndarray


def stability(F: DriftMatrix | np.ndarray) -> Stability:
    """Eigenvalue (Routh-Hurwitz equivalent) test; stable iff max Re < -1e-9 ||F||."""
    A = F.entries if isinstance(F, DriftMatrix) else np.asarray(F)
    if not np.all(np.isfinite(A)):
        raise ValueError("drift matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue solver failed: {exc}") from exc
    margin = float(ev.real.max())
    eps = 1e-9 * np.linalg.norm(A)
    return Stability(margin < -eps, margin, ev)


@dataclass
class StabilityPoint:
    gphi_over_G: float
    omegaphi_over_omegad: float
    stable: bool
    margin: float


def params_for_map_point(p: PhysicalParams, gphi_over_G: float, omegaphi_over_omegad: float) -> PhysicalParams:
    """Mirror frequency set from omega_d; mirror mass chosen so g_phi hits the target ratio.

    g_phi = (c l / L) sqrt(hbar / (I omega_phi)) with I = M R_m^2 / 2, so changing
    omega_phi alone would also move g_phi.  Both inputs are re-derived per point.
    """
    d0 = derive(p)
    w_phi = omegaphi_over_omegad * d0.omega_d
    g_target = gphi_over_G * d0.G
    k = p.constants
    if g_target <= 0:
        # g_phi -> 0 limit: a very heavy mirror
        mass = p.mirror_mass * 1e30
    else:
        I = (k.c * p.oam / p.cavity_length) ** 2 * k.hbar / (w_phi * g_target**2)
        mass = 2 * I / p.mirror_radius**2
    return p.replace(mirror_freq=w_phi / TWO_PI, mirror_mass=mass)


def _map_point(p: PhysicalParams, gx: float, wy: float, detuning_ratio: float) -> StabilityPoint:
    q = params_for_map_point(p, gx, wy)
    d = derive(q)
    _, d, s = working_point(q, delta_prime=detuning_ratio * d.omega_phi)
    st = stability(build_drift(d, s))
    return StabilityPoint(gx, wy, st.stable, st.margin)


def stability_map(p: PhysicalParams, gphi_over_G, omegaphi_over_omegad, *,
                  detuning_ratio: float = 1.0, threads: int = 1) -> list[list[StabilityPoint]]:
    """Stability over a rectangular (g_phi/G, omega_phi/omega_d) grid.

    Every point re-derives the parameters and re-solves the steady state at
    Delta' = detuning_ratio * omega_phi.  Rows follow ``omegaphi_over_omegad``.
    """
    gx = np.atleast_1d(np.asarray(gphi_over_G, dtype=float))
    wy = np.atleast_1d(np.asarray(omegaphi_over_omegad, dtype=float))
    jobs = [(g, w) for w in wy for g in gx]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            flat = list(ex.map(lambda j: _map_point(p, j[0], j[1], detuning_ratio), jobs))
    else:
        flat = [_map_point(p, g, w, detuning_ratio) for g, w in jobs]
    n = len(gx)
    return [flat[i * n:(i + 1) * n] for i in range(len(wy))]


def stability_boundary(grid: list[list[StabilityPoint]]) -> list[tuple[float, float]]:
    """Boundary polyline: for each g_phi/G column, the omega ratio where margin changes sign.

    Linear interpolation of the margin between adjacent rows.
    """
    out = []
    n_rows, n_cols = len(grid), len(grid[0])
    for j in range(n_cols):
        for i in range(n_rows - 1):
            a, b = grid[i][j], grid[i + 1][j]
            if (a.margin < 0) != (b.margin < 0):
                t = a.margin / (a.margin - b.margin)
                y = a.omegaphi_over_omegad + t * (b.omegaphi_over_omegad - a.omegaphi_over_omegad)
                out.append((a.gphi_over_G, y))
    return out
