"""Mean-field steady state, optical bistability and critical thresholds.

With Delta' = Delta~ + K x (x = a_s^2, K = Omega~ G^2 + g_phi^2/omega_phi) the
intracavity photon number solves the cubic

    K^2 x^3 + 2 K Delta~ x^2 + (Delta~^2 + kappa^2) x - eta^2 = 0,  kappa = gamma0/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DerivedParams, ParameterError

RESIDUAL_TOL = 1e-12
FOLD_DISCRIMINANT_TOL = 1e-9


class SteadyStateError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SteadyState:
    a_s: float
    intensity: float
    X_cs: float
    X_ds: float
    phi_s: float
    Delta_prime: float
    branch_index: int
    Omegatilde_c: float
    Omegatilde_d: float
    params_fingerprint: str = ""
    n_branches: int = 1


def _residual(d: DerivedParams, x: float) -> float:
    dp = d.Delta_tilde + d.kerr * x
    return x * (dp**2 + (d.gamma0 / 2) ** 2) - d.eta**2


def relative_residual(d: DerivedParams, x: float) -> float:
    """|x (Delta'^2 + kappa^2) - eta^2| / eta^2 (absolute when eta = 0)."""
    scale = d.eta**2 if d.eta > 0 else 1.0
    return abs(_residual(d, x)) / scale


def _cubic_coefficients(d: DerivedParams) -> tuple[float, float, float, float]:
    K, D, k = d.kerr, d.Delta_tilde, d.gamma0 / 2
    return K * K, 2 * K * D, D * D + k * k, -d.eta**2


def _cardano(a: float, b: float, c: float, e: float) -> list[float]:
    """Real roots of a x^3 + b x^2 + c x + e (a != 0)."""
    b, c, e = b / a, c / a, e / a
    shift = b / 3
    p = c - b * b / 3
    q = 2 * b**3 / 27 - b * c / 3 + e
    disc = (q / 2) ** 2 + (p / 3) ** 3
    scale = max(abs(q / 2) ** 2, abs(p / 3) ** 3, 1e-300)
    if disc > FOLD_DISCRIMINANT_TOL * scale:
        s = math.sqrt(disc)
        t = math.copysign(abs(-q / 2 + s) ** (1 / 3), -q / 2 + s)
        u = math.copysign(abs(-q / 2 - s) ** (1 / 3), -q / 2 - s)
        return [t + u - shift]
    if p == 0:
        return [-shift]
    # three real roots (or a fold), trigonometric form
    r = 2 * math.sqrt(-p / 3)
    arg = 3 * q / (p * r)
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg) / 3
    return [r * math.cos(phi - 2 * math.pi * k / 3) - shift for k in range(3)]


def _newton_polish(d: DerivedParams, x: float, max_iter: int = 60) -> float:
    K, D, k2 = d.kerr, d.Delta_tilde, (d.gamma0 / 2) ** 2
    for _ in range(max_iter):
        if relative_residual(d, x) < RESIDUAL_TOL:
            return x
        f = _residual(d, x)
        df = 3 * K * K * x * x + 4 * K * D * x + D * D + k2
        if df == 0:
            break
        step = f / df
        x_new = x - step
        if x_new < 0:
            x_new = x / 2
        if x_new == x:
            break
        x = x_new
    if relative_residual(d, x) < 1e3 * RESIDUAL_TOL:
        # double root at a fold: quadratic convergence is lost, accept near machine precision
        return x
    raise SteadyStateError(
        f"Newton polish did not converge: x={x!r}, residual={relative_residual(d, x):.3e}"
    )


def _dedupe(xs: list[float], rtol: float = 1e-9) -> list[float]:
    out: list[float] = []
    for x in sorted(xs):
        if out and abs(x - out[-1]) <= rtol * max(abs(x), abs(out[-1]), 1e-300):
            continue
        out.append(x)
    return out


def state_from_intensity(d: DerivedParams, x: float, branch: int = 0, n_branches: int = 1) -> SteadyState:
    a = math.sqrt(max(x, 0.0))
    return SteadyState(
        a_s=a, intensity=x,
        X_cs=-d.Omegatilde_c * d.G * x,
        X_ds=-d.Omegatilde_d * d.G * x,
        phi_s=-(d.g_phi / d.omega_phi) * x,
        Delta_prime=d.Delta_tilde + d.kerr * x,
        branch_index=branch,
        Omegatilde_c=d.Omegatilde_c, Omegatilde_d=d.Omegatilde_d,
        params_fingerprint=d.fingerprint, n_branches=n_branches,
    )


def intensity_roots(d: DerivedParams) -> list[float]:
    """All nonnegative real photon numbers x = a_s^2, ascending, Newton-polished."""
    if d.eta == 0:
        return [0.0]
    a, b, c, e = _cubic_coefficients(d)
    if a == 0:
        # no Kerr-like shift: linear in x
        return [d.eta**2 / c]
    roots = [_newton_polish(d, r) for r in _cardano(a, b, c, e) if r > -1e-12 * abs(e / c)]
    roots = _dedupe([r for r in roots if r >= 0])
    if not roots:
        raise SteadyStateError("no nonnegative real root found (eta > 0)")
    return roots


def solve_steady(d: DerivedParams) -> list[SteadyState]:
    xs = intensity_roots(d)
    return [state_from_intensity(d, x, i, len(xs)) for i, x in enumerate(xs)]


class BranchSelectionError(ValueError):
    """Raised when a bistable working point needs an explicit branch choice."""


def working_point(p, delta_prime: float | None = None, branch: int | None = None):
    """Resolve a :class:`PhysicalParams` to ``(params, derived, steady_state)``.

    With ``delta_prime`` (rad/s) the effective detuning is back-solved so that the
    steady state sits at that modified detuning; the returned params carry the
    adjusted ``cavity_detuning_eff``.  Otherwise the configured detuning is used
    and ``branch`` must be given whenever more than one branch exists.
    """
    from .params import TWO_PI, derive

    d = derive(p)
    if delta_prime is not None:
        dt = detuning_for_modified(d, delta_prime)
        p = p.replace(cavity_detuning_eff=dt / TWO_PI)
        d = derive(p)
        target = d.eta**2 / (delta_prime**2 + (d.gamma0 / 2) ** 2)
        states = solve_steady(d)
        s = min(states, key=lambda st: abs(st.intensity - target))
        return p, d, s
    states = solve_steady(d)
    if len(states) == 1:
        return p, d, states[0]
    if branch is None:
        raise BranchSelectionError(
            f"{len(states)} steady branches at this working point; choose one of 0..{len(states) - 1}"
        )
    if not 0 <= branch < len(states):
        raise BranchSelectionError(f"branch {branch} out of range; choose one of 0..{len(states) - 1}")
    return p, d, states[branch]


def detuning_for_modified(d: DerivedParams, delta_prime: float) -> float:
    """Effective detuning Delta~ (rad/s) whose steady state has the given Delta'."""
    x = d.eta**2 / (delta_prime**2 + (d.gamma0 / 2) ** 2)
    return delta_prime - d.kerr * x


def discriminant(d: DerivedParams) -> float:
    """Relative discriminant of the depressed cubic; ~0 at folds, > 0 for one real root."""
    a, b, c, e = _cubic_coefficients(d)
    if a == 0:
        return 1.0
    b, c, e = b / a, c / a, e / a
    p = c - b * b / 3
    q = 2 * b**3 / 27 - b * c / 3 + e
    scale = max(abs(q / 2) ** 2, abs(p / 3) ** 3, 1e-300)
    return ((q / 2) ** 2 + (p / 3) ** 3) / scale


def critical_thresholds(d: DerivedParams) -> dict[str, float]:
    """Critical detuning (rad/s) and critical input power (W) for bistability."""
    if d.omega_phi == 0:
        raise ParameterError("omega_phi = 0: critical power undefined")
    delta_cr = -math.sqrt(3) * d.gamma0 / 2
    if d.kerr == 0:
        p_cr = math.inf
    else:
        p_cr = d.hbar * d.omega0 * d.gamma0**2 / (3 * math.sqrt(3) * d.kerr)
    return {"Delta_cr": delta_cr, "P_cr": p_cr}


@dataclass
class BistabilityRow:
    sweep_value: float
    branches: list[float]
    fold: bool = False

    @property
    def n_branches(self) -> int:
        return len(self.branches)


def bistability_scan(p, sweep: str, values) -> list[BistabilityRow]:
    """Sweep drive power (W) or effective detuning (Hz) and list all branches.

    ``p`` is a :class:`PhysicalParams`; ``sweep`` is ``"power"`` or ``"detuning"``.
    Rows where the branch count changes relative to the previous row are marked
    as folds.  Branch index 1 of a three-branch row is the middle branch, which
    is statically unstable by fold topology.
    """
    from .params import derive

    values = np.asarray(values, dtype=float)
    if values.size > 1:
        dv = np.diff(values)
        if not (np.all(dv > 0) or np.all(dv < 0)):
            raise ValueError("sweep grid must be strictly monotone")
    key = {"power": "drive_power", "detuning": "cavity_detuning_eff"}[sweep]
    rows = []
    prev = None
    for v in values:
        d = derive(p.replace(**{key: float(v)}))
        xs = intensity_roots(d)
        row = BistabilityRow(float(v), xs)
        if prev is not None and prev != len(xs):
            row.fold = True
        prev = len(xs)
        rows.append(row)
    return rows


def fold_powers(d: DerivedParams) -> list[float]:
    """Drive powers (W) at the folds of the x(P) curve for the current detuning.

    Folds satisfy d(eta^2)/dx = 3K^2 x^2 + 4 K Delta~ x + Delta~^2 + kappa^2 = 0
    with eta^2 = x ((Delta~ + K x)^2 + kappa^2); empty when monostable.
    """
    K, D, k2 = d.kerr, d.Delta_tilde, (d.gamma0 / 2) ** 2
    if K == 0:
        return []
    roots = np.roots([3 * K * K, 4 * K * D, D * D + k2])
    xs = sorted(r.real for r in roots if abs(r.imag) <= 1e-12 * abs(r) and r.real > 0)
    eta2 = [x * ((D + K * x) ** 2 + k2) for x in xs]
    return sorted(e * d.hbar * d.omega0 / d.gamma0 for e in eta2)
