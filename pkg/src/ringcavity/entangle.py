"""Stationary Gaussian covariance and entanglement measures.

Modes are pairs of quadratures in drift-matrix order: side mode c (0),
side mode d (1), cavity (2), mirror (3).  Vacuum quadrature variance is 1/2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .dynamics import DriftMatrix, build_drift, stability
from .params import DerivedParams, PhysicalParams, ParameterError, TWO_PI, bose_occupation
from .steady import working_point

MODE_C, MODE_D, MODE_A, MODE_M = 0, 1, 2, 3
MODES = {"c": MODE_C, "d": MODE_D, "a": MODE_A, "m": MODE_M}
LYAPUNOV_TOL = 1e-9


class UnstableError(ValueError):
    """No stationary state: the drift matrix has eigenvalues with Re >= 0."""


class GaussianStateError(ArithmeticError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    D: np.ndarray
    n_c: float
    n_d: float
    n_m: float


def noise_model(d: DerivedParams) -> NoiseModel:
    n_c = bose_occupation(d.Omega_c, d.temp_atoms, d.hbar, d.k_B)
    n_d = bose_occupation(d.Omega_d, d.temp_atoms, d.hbar, d.k_B)
    n_m = bose_occupation(d.omega_phi, d.temp_mirror, d.hbar, d.k_B)
    D = np.diag([
        0.0, d.gamma_m * (2 * n_c + 1), 0.0, d.gamma_m * (2 * n_d + 1),
        d.gamma0 / 2, d.gamma0 / 2, 0.0, d.gamma_phi * (2 * n_m + 1),
    ])
    return NoiseModel(D, n_c, n_d, n_m)


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass
class CovarianceMatrix:
    V: np.ndarray
    residual: float
    bona_fide: bool = True

    def submatrix(self, modes) -> np.ndarray:
        return submatrix(self.V, modes)


def submatrix(V: np.ndarray, modes) -> np.ndarray:
    idx = [k for m in modes for k in (2 * m, 2 * m + 1)]
    return V[np.ix_(idx, idx)]


def solve_lyapunov(F: DriftMatrix, noise: NoiseModel | np.ndarray) -> CovarianceMatrix:
    """Stationary covariance V with F V + V F^T = -D."""
    A = F.entries if isinstance(F, DriftMatrix) else np.asarray(F)
    D = noise.D if isinstance(noise, NoiseModel) else np.asarray(noise, dtype=float)
    st = stability(A)
    if not st.stable:
        raise UnstableError(f"drift matrix is not stable (margin {st.margin:.3e} rad/s)")
    V = solve_continuous_lyapunov(A, -D)
    V = (V + V.T) / 2
    dn = np.linalg.norm(D)
    res = np.linalg.norm(A @ V + V @ A.T + D) / (dn if dn > 0 else 1.0)
    if res > LYAPUNOV_TOL:
        warnings.warn(f"Lyapunov residual {res:.2e} exceeds {LYAPUNOV_TOL:g}", RuntimeWarning)
    return CovarianceMatrix(V, float(res), is_bona_fide(V))


def is_bona_fide(V: np.ndarray, tol: float = 1e-9) -> bool:
    """V + i Omega / 2 >= 0 (uncertainty principle for the vacuum-1/2 convention)."""
    n = V.shape[0] // 2
    ev = np.linalg.eigvalsh(V + 0.5j * symplectic_form(n))
    return bool(ev.min() >= -tol * max(1.0, np.abs(V).max()))


def _pair_indices(pair) -> tuple[int, int]:
    if isinstance(pair, str):
        pair = tuple(pair)
    i, j = (MODES[x] if isinstance(x, str) else int(x) for x in pair)
    return i, j


def log_negativity_from_blocks(Vsub: np.ndarray) -> float:
    """Two-mode log-negativity of a 4x4 covariance matrix (blocks A, B, C)."""
    A, B, C = Vsub[:2, :2], Vsub[2:, 2:], Vsub[:2, 2:]
    sigma = np.linalg.det(A) + np.linalg.det(B) - 2 * np.linalg.det(C)
    det_v = np.linalg.det(Vsub)
    rad = sigma**2 - 4 * det_v
    if rad < -1e-9 * max(sigma**2, 1e-300):
        raise GaussianStateError(f"non-physical covariance: Sigma^2 - 4 det V = {rad:.3e}")
    eta_minus = math.sqrt(max(sigma - math.sqrt(max(rad, 0.0)), 0.0) / 2)
    if eta_minus == 0:
        raise GaussianStateError("vanishing symplectic eigenvalue")
    return max(0.0, -math.log(2 * eta_minus))


def log_negativity(V: np.ndarray, pair) -> float:
    """Log-negativity between two modes, e.g. ``pair="am"`` or ``(2, 3)``."""
    i, j = _pair_indices(pair)
    return log_negativity_from_blocks(submatrix(V, (i, j)))


def partial_transpose_log_negativity(Vsub: np.ndarray, flip_modes) -> float:
    """Log-negativity of the bipartition ``flip_modes`` | rest via symplectic eigenvalues."""
    n = Vsub.shape[0] // 2
    P = np.eye(2 * n)
    for k in flip_modes:
        P[2 * k + 1, 2 * k + 1] = -1.0
    Vt = P @ Vsub @ P
    try:
        nu = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ Vt))
    except np.linalg.LinAlgError as exc:
        raise GaussianStateError(f"symplectic eigenvalue solver failed: {exc}") from exc
    return max(0.0, -math.log(2 * nu.min()))


def contangle(Vsub: np.ndarray, flip_modes) -> float:
    return partial_transpose_log_negativity(Vsub, flip_modes) ** 2


@dataclass
class ContangleResult:
    R_min: float
    residuals: tuple  # raw (unclamped) R^{i|jk}, one per focus mode


def residual_contangle(V: np.ndarray, triple) -> ContangleResult:
    """Minimum residual contangle of a three-mode subsystem (e.g. ``"amc"``)."""
    if isinstance(triple, str):
        triple = tuple(triple)
    modes = [MODES[x] if isinstance(x, str) else int(x) for x in triple]
    Vs = submatrix(V, modes)
    raw = []
    for i in range(3):
        j, k = (x for x in range(3) if x != i)
        c_i_jk = contangle(Vs, [i])
        c_ij = contangle(submatrix(Vs, (i, j)), [0])
        c_ik = contangle(submatrix(Vs, (i, k)), [0])
        raw.append(c_i_jk - c_ij - c_ik)
    return ContangleResult(min(max(0.0, r) for r in raw), tuple(raw))


@dataclass
class PhononNumber:
    n_eff: float
    T_eff: float


def phonon_number(V: np.ndarray, d: DerivedParams) -> PhononNumber:
    n = (V[6, 6] + V[7, 7]) / 2 - 0.5
    if n < -1e-6:
        raise GaussianStateError(f"negative phonon number {n:.3e}")
    n = max(n, 0.0)
    T = 0.0 if n == 0 else d.hbar * d.omega_phi / (d.k_B * math.log1p(1 / n))
    return PhononNumber(n, T)


@dataclass
class ModeTransform:
    com_frequency: float
    relative_frequency: float
    com_optical_coupling: float
    com_relative_coupling: float
    mixing_atom: float   # weight of the side-mode quadrature in the COM coordinate
    mixing_mirror: float


def mode_transform(w_side: float, G: float, w_phi: float, g_phi: float) -> ModeTransform:
    s = G**2 + g_phi**2
    if s == 0:
        raise ParameterError("G = g_phi = 0: centre-of-mass transformation is degenerate")
    root = math.sqrt(s)
    return ModeTransform(
        com_frequency=(w_side * G**2 + w_phi * g_phi**2) / s,
        relative_frequency=(w_side * g_phi**2 + w_phi * G**2) / s,
        com_optical_coupling=root,
        com_relative_coupling=0.5 * G * g_phi * (w_phi - w_side) / s,
        mixing_atom=G / root,
        mixing_mirror=g_phi / root,
    )


@dataclass
class DarkModeReport:
    c: ModeTransform
    d: ModeTransform
    dark_c: bool
    dark_d: bool
    detuning_c: float  # (w_c - w_phi) / w_phi
    detuning_d: float
    dressed: bool


def dark_mode_report(d: DerivedParams, threshold: float = 1e-3, dressed: bool = True) -> DarkModeReport:
    """Centre-of-mass / relative coordinates of each side mode with the mirror.

    With ``dressed`` the interaction-shifted frequencies Omega_{c,d} are used
    (these are the frequencies the optical field actually sees); otherwise the
    bare omega_{c,d}.  The dark-mode flag is raised when the relative frequency
    mismatch is below ``threshold``.
    """
    wc, wd = (d.Omega_c, d.Omega_d) if dressed else (d.omega_c, d.omega_d)
    rc = (wc - d.omega_phi) / d.omega_phi
    rd = (wd - d.omega_phi) / d.omega_phi
    return DarkModeReport(
        mode_transform(wc, d.G, d.omega_phi, d.g_phi),
        mode_transform(wd, d.G, d.omega_phi, d.g_phi),
        abs(rc) < threshold, abs(rd) < threshold, rc, rd, dressed,
    )


@dataclass
class EntanglementReport:
    sweep_value: float
    E_am: float = math.nan
    E_ac: float = math.nan
    E_ad: float = math.nan
    R_min_c: float = math.nan
    R_min_d: float = math.nan
    n_eff: float = math.nan
    T_eff: float = math.nan
    stable: bool = False
    monogamy_raw: tuple = ()
    flags: list = field(default_factory=list)
    error: str = ""


def report_from_covariance(V: np.ndarray, d: DerivedParams, sweep_value: float = math.nan) -> EntanglementReport:
    rc = residual_contangle(V, "amc")
    rd = residual_contangle(V, "amd")
    ph = phonon_number(V, d)
    rep = EntanglementReport(
        sweep_value,
        E_am=log_negativity(V, "am"), E_ac=log_negativity(V, "ac"), E_ad=log_negativity(V, "ad"),
        R_min_c=rc.R_min, R_min_d=rd.R_min, n_eff=ph.n_eff, T_eff=ph.T_eff,
        stable=True, monogamy_raw=rc.residuals + rd.residuals,
    )
    for triple in ("amc", "amd"):
        if not is_bona_fide(submatrix(V, [MODES[x] for x in triple])):
            rep.flags.append(f"reduced state {triple} violates the uncertainty bound")
    return rep


def entanglement_at(p: PhysicalParams, delta_prime: float, sweep_value: float = math.nan) -> EntanglementReport:
    """Full report at one working point; unstable points come back with ``stable=False``."""
    _, d, s = working_point(p, delta_prime=delta_prime)
    F = build_drift(d, s)
    try:
        cov = solve_lyapunov(F, noise_model(d))
    except UnstableError as exc:
        return EntanglementReport(sweep_value, stable=False, error=str(exc))
    rep = report_from_covariance(cov.V, d, sweep_value)
    if not cov.bona_fide:
        # the non-reciprocal collisional coupling can push the full state below the
        # uncertainty bound; the reduced states used by the measures are checked separately
        rep.flags.append("full covariance violates the uncertainty bound")
    if p.oam == 0:
        rep.flags.append("unphysical: l = 0 leaves no OAM lattice")
    return rep


SWEEPS = ("detuning", "oam", "winding", "temp_mirror")


def entanglement_scan(p: PhysicalParams, sweep: str, values, *, delta_prime: float | None = None,
                      threads: int = 1) -> list[EntanglementReport]:
    """Entanglement reports along one parameter.

    ``sweep`` is ``"detuning"`` (values are Delta'/omega_phi), ``"oam"`` (l),
    ``"winding"`` (L_p) or ``"temp_mirror"`` (K).  For the non-detuning sweeps
    ``delta_prime`` (rad/s) fixes the modified detuning.  Every point is
    re-derived and its steady state re-solved at fixed drive power.
    """
    if sweep not in SWEEPS:
        raise ValueError(f"unknown sweep {sweep!r}; choose from {SWEEPS}")
    if sweep != "detuning" and delta_prime is None:
        raise ValueError("delta_prime is required for non-detuning sweeps")
    w_phi = TWO_PI * p.mirror_freq

    def one(v: float) -> EntanglementReport:
        v = float(v)
        try:
            if sweep == "detuning":
                return entanglement_at(p, v * w_phi, v)
            q = p.replace(**{sweep: v})
            return entanglement_at(q, delta_prime, v)
        except (ParameterError, ArithmeticError) as exc:
            return EntanglementReport(v, stable=False, error=str(exc))

    values = np.atleast_1d(np.asarray(values, dtype=float))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(one, values))
    else:
        rows = [one(v) for v in values]
    _annotate_windows(rows)
    return rows


def _annotate_windows(rows: list[EntanglementReport], tol: float = 1e-3) -> None:
    """Flag points inside a vanishing cavity-mirror entanglement window."""
    for r in rows:
        if r.stable and r.E_am < tol:
            r.flags.append("E_am vanishing")


def vanishing_windows(rows: list[EntanglementReport], attr: str = "E_am", tol: float = 1e-3) -> list[tuple[float, float]]:
    """Contiguous stable runs of sweep values where ``attr`` stays below ``tol``."""
    out, start, last = [], None, None
    for r in rows:
        inside = r.stable and getattr(r, attr) < tol
        if inside and start is None:
            start = r.sweep_value
        if not inside and start is not None:
            out.append((start, last))
            start = None
        last = r.sweep_value
    if start is not None:
        out.append((start, last))
    return out
