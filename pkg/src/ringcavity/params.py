"""Physical inputs and every derived constant of the ring-BEC / rotating-mirror cavity.

Inputs are given the way experiments quote them (cyclic frequencies in Hz, SI
lengths and masses).  :func:`derive` converts everything once to angular units
(rad/s); no other module ever multiplies by 2*pi.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, asdict, replace
from typing import Any

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """Raised for physically invalid parameter sets."""


@dataclass(frozen=True)
class Constants:
    hbar: float = 1.054571817e-34
    k_B: float = 1.380649e-23
    c: float = 2.99792458e8
    sodium_mass: float = 3.81754e-26


@dataclass(frozen=True)
class PhysicalParams:
    """Raw experimental inputs.  Frequencies are cyclic (Hz); everything else SI.

    ``oam`` and ``winding`` are physically integers; fractional values are
    accepted so that figure scans can trace smooth curves between them
    (:func:`validate` reports them).
    """

    atom_mass: float = 3.81754e-26
    n_atoms: float = 1.0e4
    ring_radius: float = 12e-6
    trap_radial: float = 840.0
    trap_axial: float = 840.0
    scattering_length: float = 0.1e-9
    atom_photon_coupling: float = 0.7e6
    atom_detuning: float = 5.4e9
    cavity_freq: float = 1.0e15
    cavity_linewidth: float = 0.2e6
    cavity_length: float = 4e-3
    oam: float = 10
    winding: float = 1
    drive_power: float = 12.4e-15
    cavity_detuning_eff: float = -0.3e6
    mirror_mass: float = 3.08e-9
    mirror_radius: float = 15e-6
    mirror_freq: float = 653.0
    mirror_damping: float = 0.08
    sidemode_damping: float = 0.8
    temp_atoms: float = 10e-9
    temp_mirror: float = 1e-3
    gtilde_override: float | None = None
    constants: Constants = field(default_factory=Constants)

    def replace(self, **changes: Any) -> "PhysicalParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    """All effective constants in angular units (rad/s) unless noted."""

    U0: float
    G: float
    eta: float
    I_atom: float           # kg m^2
    I_mirror: float         # kg m^2
    g_phi: float
    omega_c: float
    omega_d: float
    gtilde: float
    Omega_c: float
    Omega_d: float
    omegatilde_c: float
    omegatilde_d: float
    calA: float             # rad^2/s^2
    Omegatilde_c: float     # s
    Omegatilde_d: float     # s
    kerr: float             # Omegatilde*G^2 + g_phi^2/omega_phi, rad/s per photon
    Delta_tilde: float
    Delta0: float
    gamma0: float
    gamma_m: float
    gamma_phi: float
    omega_phi: float
    omega0: float
    n_atoms: float
    temp_atoms: float
    temp_mirror: float
    hbar: float
    k_B: float
    fingerprint: str = field(default="", compare=False)

    @property
    def Omegatilde(self) -> float:
        return self.Omegatilde_c + self.Omegatilde_d


def _check_positive(p: PhysicalParams) -> None:
    positive = (
        "atom_mass ring_radius trap_radial trap_axial scattering_length cavity_freq "
        "cavity_linewidth cavity_length drive_power mirror_mass mirror_radius "
        "mirror_freq mirror_damping sidemode_damping"
    ).split()
    for name in positive:
        v = getattr(p, name)
        if not (v > 0 and math.isfinite(v)):
            raise ParameterError(f"{name} must be positive and finite, got {v!r}")
    for name in ("temp_atoms", "temp_mirror"):
        v = getattr(p, name)
        if not (v >= 0 and math.isfinite(v)):
            raise ParameterError(f"{name} must be >= 0, got {v!r}")
    if not p.n_atoms >= 1:
        raise ParameterError(f"n_atoms must be >= 1, got {p.n_atoms!r}")
    if p.oam < 0:
        raise ParameterError(f"oam must be >= 0, got {p.oam!r}")
    if p.atom_detuning == 0:
        raise ParameterError("atom_detuning is zero: U0 = g_a^2/Delta_a diverges")
    if p.gtilde_override is not None and p.gtilde_override < 0:
        raise ParameterError("gtilde_override must be >= 0")


def fingerprint(p: PhysicalParams) -> str:
    """Stable hash over every physics-relevant input."""
    blob = repr(sorted(_flatten(asdict(p)).items())).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def side_mode_frequencies(p: PhysicalParams) -> tuple[float, float]:
    """Bare side-mode frequencies hbar*(L_p +/- 2l)^2 / (2 I_a), rad/s."""
    hbar = p.constants.hbar
    I_a = p.atom_mass * p.ring_radius**2
    w_c = hbar * (p.winding + 2 * p.oam) ** 2 / (2 * I_a)
    w_d = hbar * (p.winding - 2 * p.oam) ** 2 / (2 * I_a)
    return w_c, w_d


def gtilde_of(p: PhysicalParams) -> float:
    """Atom-atom interaction g~ in rad/s.

    g = 2 hbar omega_rho a / R and g~ = g / (4 pi hbar), unless overridden
    (the override is a cyclic frequency g~/2pi in Hz).
    """
    if p.gtilde_override is not None:
        return TWO_PI * p.gtilde_override
    omega_rho = TWO_PI * p.trap_radial
    return omega_rho * p.scattering_length / (TWO_PI * p.ring_radius)


def derive(p: PhysicalParams) -> DerivedParams:
    _check_positive(p)
    k = p.constants
    hbar = k.hbar

    U0 = TWO_PI * p.atom_photon_coupling**2 / p.atom_detuning
    N = float(p.n_atoms)
    G = U0 * math.sqrt(N) / (2 * math.sqrt(2))

    I_a = p.atom_mass * p.ring_radius**2
    w_c, w_d = side_mode_frequencies(p)

    gt = gtilde_of(p)
    gN = gt * N
    rad_c = (w_c + 4 * gN) ** 2 - 4 * gN**2
    rad_d = (w_d + 4 * gN) ** 2 - 4 * gN**2
    for name, r in (("Omega_c^2", rad_c), ("Omega_d^2", rad_d)):
        if r < 0:
            raise ParameterError(f"negative radicand in {name}: {r!r}")
    Om_c, Om_d = math.sqrt(rad_c), math.sqrt(rad_d)
    wt_c, wt_d = w_c + 2 * gN, w_d + 2 * gN
    calA = 2 * gN * (w_c - w_d)

    den = calA**2 + Om_c**2 * Om_d**2
    if den == 0:
        raise ParameterError("degenerate side modes: A^2 + Omega_c^2 Omega_d^2 = 0")
    Ot_c = (wt_c * Om_d**2 - wt_d * calA) / den
    Ot_d = (wt_d * Om_c**2 + wt_c * calA) / den

    I_m = p.mirror_mass * p.mirror_radius**2 / 2
    w_phi = TWO_PI * p.mirror_freq
    rad_g = hbar / (I_m * w_phi)
    if rad_g < 0:
        raise ParameterError(f"negative radicand in g_phi: {rad_g!r}")
    g_phi = k.c * p.oam / p.cavity_length * math.sqrt(rad_g)

    gamma0 = TWO_PI * p.cavity_linewidth
    omega0 = TWO_PI * p.cavity_freq
    eta = math.sqrt(p.drive_power * gamma0 / (hbar * omega0))

    kerr = (Ot_c + Ot_d) * G**2 + g_phi**2 / w_phi
    Dt = TWO_PI * p.cavity_detuning_eff

    return DerivedParams(
        U0=U0, G=G, eta=eta, I_atom=I_a, I_mirror=I_m, g_phi=g_phi,
        omega_c=w_c, omega_d=w_d, gtilde=gt, Omega_c=Om_c, Omega_d=Om_d,
        omegatilde_c=wt_c, omegatilde_d=wt_d, calA=calA,
        Omegatilde_c=Ot_c, Omegatilde_d=Ot_d, kerr=kerr,
        Delta_tilde=Dt, Delta0=Dt + U0 * N / 2,
        gamma0=gamma0, gamma_m=TWO_PI * p.sidemode_damping,
        gamma_phi=TWO_PI * p.mirror_damping, omega_phi=w_phi, omega0=omega0,
        n_atoms=N, temp_atoms=p.temp_atoms, temp_mirror=p.temp_mirror,
        hbar=hbar, k_B=k.k_B, fingerprint=fingerprint(p),
    )


@dataclass
class ValidationEntry:
    name: str
    passed: bool
    value: float
    bound: float
    message: str


@dataclass
class ValidationReport:
    entries: list[ValidationEntry]

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> ValidationEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def one_d_atom_bound(p: PhysicalParams) -> float:
    """Largest N for the quasi-1D ring description: (4R/3a) sqrt(pi w_rho/w_z)."""
    return 4 * p.ring_radius / (3 * p.scattering_length) * math.sqrt(
        math.pi * p.trap_radial / p.trap_axial
    )


def validate(p: PhysicalParams) -> ValidationReport:
    """Report-only physics checks; never raises."""
    entries = []
    bound = one_d_atom_bound(p)
    entries.append(ValidationEntry(
        "one_d_constraint", p.n_atoms < bound, float(p.n_atoms), bound,
        f"1-D ring constraint N < (4R/3a)sqrt(pi w_rho/w_z): N={p.n_atoms:g}, bound={bound:.4g}",
    ))

    w_c, w_d = side_mode_frequencies(p)
    four_gN = 4 * gtilde_of(p) * p.n_atoms
    ratio = min(w_c, w_d) / four_gN if four_gN > 0 else math.inf
    entries.append(ValidationEntry(
        "weak_interaction", ratio >= 10, ratio, 10.0,
        f"omega_(c,d) >> 4 g~ N assumption: min ratio {ratio:.3g} (warn below 10)",
    ))

    integral = float(p.oam).is_integer() and float(p.winding).is_integer()
    entries.append(ValidationEntry(
        "integer_quantum_numbers", integral, float(p.oam), float(p.winding),
        f"l={p.oam!r}, L_p={p.winding!r} should be integers",
    ))
    return ValidationReport(entries)


def physical_fields() -> list[str]:
    return [f.name for f in fields(PhysicalParams) if f.name != "constants"]


def bose_occupation(omega: float, temperature: float, hbar: float, k_B: float) -> float:
    """Mean thermal occupation 1/(exp(hbar w / k_B T) - 1); zero at T = 0."""
    if temperature <= 0:
        return 0.0
    x = hbar * omega / (k_B * temperature)
    return 0.0 if x > 700 else 1.0 / math.expm1(x)
