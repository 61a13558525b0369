"""Data generators for the reference figures.

Every generator takes a parameter set (defaults to the matching preset) and
returns :class:`FigureData`: one or more tables plus a plot specification.
Unstable scan points are gaps (NaN with ``stable = 0``); exceptions at single
points are collected as failures so a scan can still be written out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import build_drift, stability_map
from .entangle import EntanglementReport, entanglement_scan
from .io import PlotSpec
from .params import PhysicalParams, TWO_PI
from .presets import (ENTANGLEMENT, ENTANGLEMENT_DETUNING_RATIO, SQUEEZING, SQUEEZING_COLD,
                      TRIPARTITE_DETUNING_RATIO, scale_G)
from .spectra import homodyne_spectrum, mirror_resonance_scan, optimal_angle
from .steady import bistability_scan, working_point

STEADY_COLUMNS = ["sweep_value", "branch0", "branch1", "branch2", "n_branches"]
MAP_COLUMNS = ["gphi_over_G", "omegaphi_over_omegad", "stable", "margin"]
SPECTRUM_COLUMNS = ["omega_hz", "theta_deg", "S", "S_vac", "S_th_c", "S_th_d", "S_th_mirror"]
ENT_COLUMNS = ["sweep_value", "E_am", "E_ac", "E_ad", "Rmin_amc", "Rmin_amd", "n_eff", "stable", "bona_fide"]


@dataclass
class Table:
    stem: str
    columns: list[str]
    rows: list[list]
    plot: PlotSpec | None = None
    comments: list[str] = field(default_factory=list)


@dataclass
class FigureData:
    name: str
    params: PhysicalParams
    tables: list[Table]
    failures: list[dict] = field(default_factory=list)
    options: dict = field(default_factory=dict)


# -- row builders ---------------------------------------------------------

def steady_rows(rows) -> list[list]:
    out = []
    for r in rows:
        b = list(r.branches) + [math.nan] * (3 - len(r.branches))
        out.append([r.sweep_value, *b[:3], r.n_branches])
    return out


def spectrum_rows(res, extra=()) -> list[list]:
    c = res.contributions
    th = math.degrees(res.theta)
    return [[w / TWO_PI, th, res.S[i], c["vacuum"][i], c["thermal_c"][i], c["thermal_d"][i],
             c["thermal_mirror"][i], *extra] for i, w in enumerate(res.omega)]


def entanglement_rows(reports: list[EntanglementReport]) -> list[list]:
    return [[r.sweep_value, r.E_am, r.E_ac, r.E_ad, r.R_min_c, r.R_min_d, r.n_eff, r.stable,
             r.stable and not any("uncertainty" in f for f in r.flags)] for r in reports]


def _failures(reports: list[EntanglementReport]) -> list[dict]:
    # unstable points are legitimate gaps; only errors count as failures
    return [{"sweep_value": r.sweep_value, "error": r.error} for r in reports
            if not r.stable and r.error and "not stable" not in r.error]


# -- figures --------------------------------------------------------------

def fig2a(p: PhysicalParams | None = None, n: int = 1001, **_) -> FigureData:
    p = p or SQUEEZING
    powers = np.linspace(0.01e-12, 5e-12, n)
    rows = bistability_scan(p, "power", powers)
    table = Table("fig2a", STEADY_COLUMNS, steady_rows(rows), PlotSpec(
        "Intracavity photon number vs drive power", "P_in (W)", "|a_s|^2",
        [("1:2", "branch 0"), ("1:3", "branch 1"), ("1:4", "branch 2")]),
        [f"effective detuning {p.cavity_detuning_eff:g} Hz", "sweep_value = drive power (W)"])
    return FigureData("fig2a", p, [table])


def fig2b(p: PhysicalParams | None = None, n: int = 2001, **_) -> FigureData:
    p = p or SQUEEZING.replace(drive_power=3e-12)
    dets = np.linspace(-0.8e6, 0.2e6, n)
    rows = bistability_scan(p, "detuning", dets)
    table = Table("fig2b", STEADY_COLUMNS, steady_rows(rows), PlotSpec(
        "Intracavity photon number vs effective detuning", "Delta~/2pi (Hz)", "|a_s|^2",
        [("1:2", "branch 0"), ("1:3", "branch 1"), ("1:4", "branch 2")]),
        [f"drive power {p.drive_power:g} W", "sweep_value = effective detuning (Hz)"])
    return FigureData("fig2b", p, [table])


def fig3(p: PhysicalParams | None = None, n: int = 200, threads: int = 1, **_) -> FigureData:
    p = p or SQUEEZING
    gx = np.linspace(0.0, 50.0, n)
    wy = np.linspace(0.02, 3.0, n)
    grid = stability_map(p, gx, wy, threads=threads)
    rows = [[pt.gphi_over_G, pt.omegaphi_over_omegad, pt.stable, pt.margin] for row in grid for pt in row]
    table = Table("fig3", MAP_COLUMNS, rows, PlotSpec(
        "Stability map (1 = stable)", "g_phi/G", "omega_phi/omega_d", [],
        extra=["set view map", "set pm3d map"]),
        ["Delta' = omega_phi at every point"])
    table.plot.extra.append("splot 'fig3.csv' every ::1 using 1:2:3 with pm3d notitle")
    return FigureData("fig3", p, [table])


def fig4a(p: PhysicalParams | None = None, n: int = 4000, **_) -> FigureData:
    p = p or SQUEEZING
    _, d, s = working_point(p, delta_prime=TWO_PI * p.mirror_freq)
    F = build_drift(d, s)
    w = TWO_PI * np.linspace(500.0, 800.0, n)
    rows = []
    for deg in (90.0, 30.0, 5.0):
        rows += spectrum_rows(homodyne_spectrum(d, s, w, math.radians(deg), F))
    table = Table("fig4a", SPECTRUM_COLUMNS, rows, PlotSpec(
        "Output quadrature PSD", "omega/2pi (Hz)", "S", [],
        extra=["angles = '90 30 5'",
               "plot for [i=1:3] 'fig4a.csv' every ::1 using 1:(abs($2-(word(angles,i)+0))<1e-6 ? $3 : 1/0) "
               "with lines title 'theta='.word(angles,i)"]))
    return FigureData("fig4a", p, [table])


def fig4b_frequencies(p: PhysicalParams) -> dict[str, float]:
    """Response frequencies (rad/s) of the theta sweeps: the theta = 7 deg dips next to
    Omega_c and Omega_d, and the mirror frequency."""
    _, d, s = working_point(p, delta_prime=TWO_PI * p.mirror_freq)
    F = build_drift(d, s)
    out = {}
    for key, centre in (("c", d.Omega_c), ("d", d.Omega_d)):
        w = centre + TWO_PI * np.linspace(-20.0, 20.0, 4001)
        S = homodyne_spectrum(d, s, w, math.radians(7.0), F).S
        out[key] = float(w[np.argmin(S)])
    out["phi"] = d.omega_phi
    return out


def fig4b(p: PhysicalParams | None = None, n: int = 1801, **_) -> FigureData:
    p = p or SQUEEZING
    _, d, s = working_point(p, delta_prime=TWO_PI * p.mirror_freq)
    F = build_drift(d, s)
    rows = []
    for key, w in fig4b_frequencies(p).items():
        for deg in np.linspace(0.0, 180.0, n):
            rows += spectrum_rows(homodyne_spectrum(d, s, w, math.radians(deg), F))
    table = Table("fig4b", SPECTRUM_COLUMNS, rows, PlotSpec(
        "PSD vs homodyne angle", "theta (deg)", "S", [],
        extra=["plot 'fig4b.csv' every ::1 using 2:3 with points pt 7 ps 0.3 notitle"]))
    return FigureData("fig4b", p, [table])


def fig5(p: PhysicalParams | None = None, n: int = 2000, **_) -> FigureData:
    p = p or SQUEEZING_COLD
    rows = []
    for G_hz in (3.2e3, 9.6e3, 22.4e3):
        q = scale_G(p, G_hz)
        _, d, s = working_point(q, delta_prime=TWO_PI * q.mirror_freq)
        F = build_drift(d, s)
        for w in TWO_PI * np.linspace(500.0, 800.0, n):
            oa = optimal_angle(d, s, float(w), F)
            res = homodyne_spectrum(d, s, float(w), oa.theta, F)
            rows += spectrum_rows(res, extra=(math.degrees(oa.theta), G_hz))
    table = Table("fig5", SPECTRUM_COLUMNS + ["theta_opt_deg", "G_over_2pi_hz"], rows, PlotSpec(
        "Optimised PSD", "omega/2pi (Hz)", "S_opt", [],
        extra=["couplings = '3200 9600 22400'",
               "plot for [i=1:3] 'fig5.csv' every ::1 using 1:(abs($9-(word(couplings,i)+0))<1e-6 ? $3 : 1/0) "
               "with lines title 'G/2pi='.word(couplings,i).' Hz'"]))
    return FigureData("fig5", p, [table])


def fig6(p: PhysicalParams | None = None, n: int = 101, **_) -> FigureData:
    p = p or SQUEEZING_COLD.replace(oam=15)
    rows = mirror_resonance_scan(p, np.linspace(0.0, 10.0, n))
    out = [[r.winding, r.omega / TWO_PI, math.degrees(r.theta_opt), r.S_opt, r.stable] for r in rows]
    table = Table("fig6", ["sweep_value", "omega_hz", "theta_opt_deg", "S_opt", "stable"], out, PlotSpec(
        "Optimised PSD at the mirror frequency", "L_p", "S_opt", [("1:4", "S_opt")]))
    return FigureData("fig6", p, [table])


def _ent_plot(title, xlabel, cols) -> PlotSpec:
    idx = {c: i + 1 for i, c in enumerate(ENT_COLUMNS)}
    return PlotSpec(title, xlabel, "", [(f"1:{idx[c]}", c) for c in cols])


def fig7a(p: PhysicalParams | None = None, n: int = 231, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    main = entanglement_scan(p, "detuning", np.linspace(-2.5, -0.2, n), threads=threads)
    w_phi = TWO_PI * p.mirror_freq
    inset = entanglement_scan(p, "temp_mirror", np.linspace(0.5e-3, 20e-3, 40),
                              delta_prime=ENTANGLEMENT_DETUNING_RATIO * w_phi, threads=threads)
    return FigureData("fig7a", p, [
        Table("fig7a", ENT_COLUMNS, entanglement_rows(main),
              _ent_plot("Bipartite entanglement vs detuning", "Delta'/omega_phi", ["E_am", "E_ac", "E_ad"]),
              ["sweep_value = Delta'/omega_phi"]),
        Table("fig7a_temperature", ENT_COLUMNS, entanglement_rows(inset),
              _ent_plot("Bipartite entanglement vs mirror bath temperature", "T_phi (K)", ["E_ac", "E_ad"]),
              [f"sweep_value = T_phi (K); Delta' = {ENTANGLEMENT_DETUNING_RATIO} omega_phi"]),
    ], _failures(main) + _failures(inset))


def _l_scan(p, ratio, threads, n):
    return entanglement_scan(p.replace(winding=1), "oam", np.linspace(200.0, 260.0, n),
                             delta_prime=ratio * TWO_PI * p.mirror_freq, threads=threads)


def _lp_scan(p, ratio, threads, n):
    return entanglement_scan(p, "winding", np.linspace(0.0, 60.0, n),
                             delta_prime=ratio * TWO_PI * p.mirror_freq, threads=threads)


def fig7b(p: PhysicalParams | None = None, n: int = 241, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    rows = _l_scan(p, ENTANGLEMENT_DETUNING_RATIO, threads, n)
    return FigureData("fig7b", p, [Table("fig7b", ENT_COLUMNS, entanglement_rows(rows),
        _ent_plot("Bipartite entanglement vs OAM", "l", ["E_am", "E_ac", "E_ad"]),
        [f"sweep_value = l; L_p = 1; Delta' = {ENTANGLEMENT_DETUNING_RATIO} omega_phi"])], _failures(rows))


def fig7c(p: PhysicalParams | None = None, n: int = 241, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    rows = _lp_scan(p, ENTANGLEMENT_DETUNING_RATIO, threads, n)
    return FigureData("fig7c", p, [Table("fig7c", ENT_COLUMNS, entanglement_rows(rows),
        _ent_plot("Bipartite entanglement vs winding number", "L_p", ["E_am", "E_ac", "E_ad"]),
        [f"sweep_value = L_p; l = {p.oam:g}; Delta' = {ENTANGLEMENT_DETUNING_RATIO} omega_phi"])], _failures(rows))


def fig8(p: PhysicalParams | None = None, n: int = 241, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    rows = _l_scan(p, ENTANGLEMENT_DETUNING_RATIO, threads, n)
    inset = _lp_scan(p, ENTANGLEMENT_DETUNING_RATIO, threads, n)
    return FigureData("fig8", p, [
        Table("fig8", ENT_COLUMNS, entanglement_rows(rows),
              PlotSpec("Mirror phonon number vs OAM", "l", "n_eff", [("1:7", "n_eff")], logscale_y=True),
              ["sweep_value = l; L_p = 1"]),
        Table("fig8_winding", ENT_COLUMNS, entanglement_rows(inset),
              PlotSpec("Mirror phonon number vs winding number", "L_p", "n_eff", [("1:7", "n_eff")], logscale_y=True),
              [f"sweep_value = L_p; l = {p.oam:g}"]),
    ], _failures(rows) + _failures(inset))


def fig9a(p: PhysicalParams | None = None, n: int = 231, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    rows = entanglement_scan(p, "detuning", np.linspace(-2.5, -0.2, n), threads=threads)
    return FigureData("fig9a", p, [Table("fig9a", ENT_COLUMNS, entanglement_rows(rows),
        _ent_plot("Minimum residual contangle vs detuning", "Delta'/omega_phi", ["Rmin_amc", "Rmin_amd"]),
        ["sweep_value = Delta'/omega_phi"])], _failures(rows))


def fig9b(p: PhysicalParams | None = None, n: int = 241, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    rows = _l_scan(p, TRIPARTITE_DETUNING_RATIO, threads, n)
    return FigureData("fig9b", p, [Table("fig9b", ENT_COLUMNS, entanglement_rows(rows),
        _ent_plot("Minimum residual contangle vs OAM", "l", ["Rmin_amc", "Rmin_amd"]),
        [f"sweep_value = l; L_p = 1; Delta' = {TRIPARTITE_DETUNING_RATIO} omega_phi"])], _failures(rows))


def fig9c(p: PhysicalParams | None = None, n: int = 241, threads: int = 1, **_) -> FigureData:
    p = p or ENTANGLEMENT
    rows = _lp_scan(p, TRIPARTITE_DETUNING_RATIO, threads, n)
    return FigureData("fig9c", p, [Table("fig9c", ENT_COLUMNS, entanglement_rows(rows),
        _ent_plot("Minimum residual contangle vs winding number", "L_p", ["Rmin_amc", "Rmin_amd"]),
        [f"sweep_value = L_p; l = {p.oam:g}; Delta' = {TRIPARTITE_DETUNING_RATIO} omega_phi"])], _failures(rows))


FIGURES = {
    "fig2a": fig2a, "fig2b": fig2b, "fig3": fig3, "fig4a": fig4a, "fig4b": fig4b,
    "fig5": fig5, "fig6": fig6, "fig7a": fig7a, "fig7b": fig7b, "fig7c": fig7c,
    "fig8": fig8, "fig9a": fig9a, "fig9b": fig9b, "fig9c": fig9c,
}

DEFAULT_PARAMS = {
    "fig2a": SQUEEZING, "fig2b": SQUEEZING.replace(drive_power=3e-12), "fig3": SQUEEZING,
    "fig4a": SQUEEZING, "fig4b": SQUEEZING, "fig5": SQUEEZING_COLD,
    "fig6": SQUEEZING_COLD.replace(oam=15),
    **{k: ENTANGLEMENT for k in ("fig7a", "fig7b", "fig7c", "fig8", "fig9a", "fig9b", "fig9c")},
}
