"""Command-line front end.

Exit codes: 0 success, 1 check failure, 2 usage or config error,
3 partial scan failure (CSV still written).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dynamics import build_drift, stability, stability_map
from .entangle import SWEEPS, UnstableError, entanglement_scan, noise_model, solve_lyapunov
from .figures import (DEFAULT_PARAMS, ENT_COLUMNS, FIGURES, MAP_COLUMNS, SPECTRUM_COLUMNS, STEADY_COLUMNS,
                      FigureData, Table, entanglement_rows, spectrum_rows, steady_rows)
from .io import PlotSpec, RunManifest, run_hash, write_csv, write_gnuplot
from .mc_oracle import McConfig, McConfigError, output_spectrum_estimate, sampled_spectrum, simulate
from .params import ParameterError, PhysicalParams, TWO_PI, derive, validate
from .presets import ENTANGLEMENT, ENTANGLEMENT_DETUNING_RATIO, SQUEEZING
from .spectra import homodyne_spectrum, markovian_spectrum, optimal_angle
from .steady import BranchSelectionError, bistability_scan, critical_thresholds, solve_steady, working_point

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _config(args, base: PhysicalParams | None, default: PhysicalParams) -> RunConfig:
    if args.config is None:
        return RunConfig(default)
    return load_config(args.config, base)


def _resolve(cfg: RunConfig, default_ratio: float | None = None):
    """(params, derived, steady) for the configured working point.

    Without a modified detuning the command default applies, unless a branch
    is named: then the configured raw detuning and that branch define the point.
    """
    dp = cfg.working_point.delta_prime(cfg.params)
    if dp is None and default_ratio is not None and cfg.working_point.branch is None:
        dp = default_ratio * TWO_PI * cfg.params.mirror_freq
    try:
        return working_point(cfg.params, delta_prime=dp, branch=cfg.working_point.branch)
    except BranchSelectionError as exc:
        raise UsageError(f"{exc}; set [working_point] branch") from exc


def _emit(args, payload: dict) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=float))
    else:
        for k, v in payload.items():
            print(f"{k:>24s}  {v}")


def _write_tables(out: Path, command: str, p: PhysicalParams, tables: list[Table], options: dict,
                  failures: list[dict], t0: float, with_plots: bool = True) -> list[str]:
    h = run_hash(p, command, options)
    written = []
    for t in tables:
        path = write_csv(out / f"{t.stem}.csv", t.columns, t.rows, manifest_hash=h,
                         comments=[f"command: {command}", f"params_fingerprint: {derive(p).fingerprint}", *t.comments])
        written.append(path.name)
        if with_plots and t.plot is not None:
            written.append(write_gnuplot(out / f"{t.stem}.gp", path.name, t.plot).name)
    manifest = RunManifest(h, command, written, wall_time_s=time.time() - t0, failures=failures, options=options)
    stem = tables[0].stem if tables else command
    manifest.outputs.append(f"{stem}.manifest.json")
    manifest.write(out / f"{stem}.manifest.json")
    return written


# -- commands -------------------------------------------------------------

def cmd_derive(args) -> int:
    cfg = _config(args, None, SQUEEZING)
    p = cfg.params
    d = derive(p)
    crit = critical_thresholds(d)
    payload = {
        "U0_over_2pi_hz": d.U0 / TWO_PI,
        "G_over_2pi_hz": d.G / TWO_PI,
        "g_phi_over_2pi_hz": d.g_phi / TWO_PI,
        "omega_c_over_2pi_hz": d.omega_c / TWO_PI,
        "omega_d_over_2pi_hz": d.omega_d / TWO_PI,
        "Omega_c_over_2pi_hz": d.Omega_c / TWO_PI,
        "Omega_d_over_2pi_hz": d.Omega_d / TWO_PI,
        "gtilde_over_2pi_hz": d.gtilde / TWO_PI,
        "kerr_over_2pi_hz": d.kerr / TWO_PI,
        "eta_per_s": d.eta,
        "Delta_cr_over_2pi_hz": crit["Delta_cr"] / TWO_PI,
        "P_cr_w": crit["P_cr"],
        "fingerprint": d.fingerprint,
    }
    for e in validate(p).entries:
        payload[f"check_{e.name}"] = "ok" if e.passed else f"WARN: {e.message}"
    _emit(args, payload)
    rows = [[k, v] for k, v in payload.items()]
    _write_tables(Path(args.out), "derive", p, [Table("derive", ["quantity", "value"], rows)], {}, [], args._t0,
                  with_plots=False)
    return EXIT_OK


def cmd_steady(args) -> int:
    cfg = _config(args, None, SQUEEZING)
    p = cfg.params
    if args.sweep:
        values = np.linspace(args.start, args.stop, args.num)
        rows = bistability_scan(p, args.sweep, values)
        table = Table("steady", STEADY_COLUMNS, steady_rows(rows), PlotSpec(
            "Steady-state branches", args.sweep, "|a_s|^2",
            [("1:2", "branch 0"), ("1:3", "branch 1"), ("1:4", "branch 2")]))
        _write_tables(Path(args.out), "steady", p, [table], {"sweep": args.sweep, "start": args.start,
                      "stop": args.stop, "num": args.num}, [], args._t0)
        folds = [r.sweep_value for r in rows if r.fold]
        _emit(args, {"points": len(rows), "folds": folds, "max_branches": max(r.n_branches for r in rows)})
        return EXIT_OK
    if cfg.working_point.delta_prime(p) is not None:
        _, d, s = _resolve(cfg)
        states = [s]
    else:
        d = derive(p)
        states = solve_steady(d)
    payload = {"n_branches": len(states)}
    for st in states:
        payload[f"branch{st.branch_index}"] = {k: v for k, v in asdict(st).items() if k != "params_fingerprint"}
    _emit(args, payload)
    rows = [[st.branch_index, st.intensity, st.a_s, st.Delta_prime / TWO_PI] for st in states]
    _write_tables(Path(args.out), "steady", p,
                  [Table("steady", ["branch", "intensity", "a_s", "delta_prime_hz"], rows)], {}, [], args._t0,
                  with_plots=False)
    return EXIT_OK


def cmd_stability_map(args) -> int:
    cfg = _config(args, None, SQUEEZING)
    gx = np.linspace(args.gmin, args.gmax, args.num)
    wy = np.linspace(args.wmin, args.wmax, args.num)
    grid = stability_map(cfg.params, gx, wy, threads=args.threads)
    rows = [[pt.gphi_over_G, pt.omegaphi_over_omegad, pt.stable, pt.margin] for r in grid for pt in r]
    table = Table("stability_map", MAP_COLUMNS, rows, PlotSpec(
        "Stability map", "g_phi/G", "omega_phi/omega_d", [],
        extra=["set view map", "splot 'stability_map.csv' every ::1 using 1:2:3 with pm3d notitle"]))
    opts = {k: getattr(args, k) for k in ("gmin", "gmax", "wmin", "wmax", "num")}
    _write_tables(Path(args.out), "stability-map", cfg.params, [table], opts, [], args._t0)
    _emit(args, {"points": len(rows), "stable_fraction": sum(r[2] for r in rows) / len(rows)})
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _config(args, None, SQUEEZING)
    p, d, s = _resolve(cfg, default_ratio=1.0)
    F = build_drift(d, s)
    st = stability(F)
    if not st.stable:
        raise UsageError(f"working point is unstable (margin {st.margin:.3e} rad/s); no stationary spectrum")
    w = TWO_PI * np.linspace(args.fmin, args.fmax, args.num)
    rows = []
    for deg in args.theta:
        rows += spectrum_rows(homodyne_spectrum(d, s, w, math.radians(deg), F))
    table = Table("spectrum", SPECTRUM_COLUMNS, rows, PlotSpec("Output PSD", "omega/2pi (Hz)", "S", [("1:3", "S")]))
    opts = {"theta": args.theta, "fmin": args.fmin, "fmax": args.fmax, "num": args.num}
    _write_tables(Path(args.out), "spectrum", p, [table], opts, [], args._t0)
    S = np.array([r[2] for r in rows])
    _emit(args, {"points": len(rows), "S_min": float(S.min()), "S_max": float(S.max())})
    return EXIT_OK


def cmd_squeeze_opt(args) -> int:
    cfg = _config(args, None, SQUEEZING)
    p, d, s = _resolve(cfg, default_ratio=1.0)
    F = build_drift(d, s)
    if not stability(F).stable:
        raise UsageError("working point is unstable; no stationary spectrum")
    rows = []
    for w in TWO_PI * np.linspace(args.fmin, args.fmax, args.num):
        oa = optimal_angle(d, s, float(w), F)
        rows += spectrum_rows(homodyne_spectrum(d, s, float(w), oa.theta, F), extra=(math.degrees(oa.theta),))
    table = Table("squeeze_opt", SPECTRUM_COLUMNS + ["theta_opt_deg"], rows,
                  PlotSpec("Optimised PSD", "omega/2pi (Hz)", "S_opt", [("1:3", "S_opt")]))
    _write_tables(Path(args.out), "squeeze-opt", p, [table],
                  {"fmin": args.fmin, "fmax": args.fmax, "num": args.num}, [], args._t0)
    S = np.array([r[2] for r in rows])
    _emit(args, {"points": len(rows), "S_opt_min": float(S.min()),
                 "at_hz": float(rows[int(S.argmin())][0])})
    return EXIT_OK


def cmd_entangle_scan(args) -> int:
    cfg = _config(args, None, ENTANGLEMENT)
    p = cfg.params
    values = np.linspace(args.start, args.stop, args.num)
    dp = None
    if args.sweep != "detuning":
        dp = cfg.working_point.delta_prime(p)
        if dp is None:
            dp = args.detuning_ratio * TWO_PI * p.mirror_freq
    reports = entanglement_scan(p, args.sweep, values, delta_prime=dp, threads=args.threads)
    failures = [{"sweep_value": r.sweep_value, "error": r.error} for r in reports
                if not r.stable and r.error and "not stable" not in r.error]
    table = Table("entangle_scan", ENT_COLUMNS, entanglement_rows(reports),
                  PlotSpec("Entanglement scan", args.sweep, "", [("1:2", "E_am"), ("1:3", "E_ac"), ("1:4", "E_ad")]))
    opts = {"sweep": args.sweep, "start": args.start, "stop": args.stop, "num": args.num,
            "delta_prime": dp}
    _write_tables(Path(args.out), "entangle-scan", p, [table], opts, failures, args._t0)
    _emit(args, {"points": len(reports), "unstable": sum(not r.stable for r in reports), "failures": len(failures)})
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_figure(args) -> int:
    if args.name not in FIGURES:
        raise UsageError(f"unknown figure {args.name!r}; choose from {', '.join(FIGURES)}")
    base = DEFAULT_PARAMS[args.name]
    p = load_config(args.config, base).params if args.config else base
    fig: FigureData = FIGURES[args.name](p, threads=args.threads)
    written = _write_tables(Path(args.out), f"figure {args.name}", fig.params, fig.tables,
                            {"figure": args.name}, fig.failures, args._t0)
    _emit(args, {"figure": args.name, "outputs": written, "failures": len(fig.failures)})
    return EXIT_PARTIAL if fig.failures else EXIT_OK


def _corrupt(F):
    """Fault-injection hook: perturb the cavity detuning entries of the analytic drift."""
    from dataclasses import replace
    E = F.entries.copy()
    E[4, 5] *= 1.5
    E[5, 4] *= 1.5
    return replace(F, entries=E)


def covariance_check(F, D, cfg: McConfig, F_analytic=None) -> dict:
    F_analytic = F if F_analytic is None else F_analytic
    st = stability(F)
    if not st.stable:
        short = McConfig(dt=cfg.dt, t_total=min(cfg.t_total, 2.0), n_traj=min(cfg.n_traj, 50),
                         seed=cfg.seed, burn_in=0.0, threads=cfg.threads)
        mc = simulate(F, D, short)
        return {"name": "divergence", "skipped_covariance": True, "passed": mc.diverging,
                "moment_trace": mc.moment_trace.tolist()}
    V = solve_lyapunov(F_analytic, D).V
    burn = 10.0 / (2 * abs(st.margin))
    if cfg.burn_in * cfg.t_total < burn:
        # stretch the run so the discarded part covers ten relaxation times
        from dataclasses import replace
        t_total = max(cfg.t_total, burn / max(cfg.burn_in, 0.3))
        cfg = replace(cfg, t_total=t_total, burn_in=burn / t_total)
    mc = simulate(F, D, cfg)
    z = (mc.V_est - V) / np.where(mc.stderr > 0, mc.stderr, np.inf)
    return {"name": "lyapunov_vs_mc", "passed": bool(np.abs(z).max() <= 3.0), "max_abs_z": float(np.abs(z).max()),
            "V": V, "V_est": mc.V_est, "stderr": mc.stderr, "z": z}


def spectrum_check(p: PhysicalParams, seed: int, n_points: int = 5, n_traj: int = 40, record_time: float = 20.0,
                   corrupt: bool = False, threads: int = 1) -> dict:
    """Markovian S(omega, theta) against the periodogram of simulated output at random points.

    The burn-in lasts ten variance-relaxation times of the slowest mode of F, so
    trajectories started at zero are stationary before the record begins.
    """
    _, d, s = working_point(p, delta_prime=TWO_PI * p.mirror_freq)
    F = build_drift(d, s)
    burn = 10.0 / (2 * abs(stability(F).margin))
    t_total = burn + record_time
    F_an = _corrupt(F) if corrupt else F
    D = noise_model(d).D
    rng = np.random.default_rng(seed)
    lines = np.array([d.Omega_c, d.Omega_d, d.omega_phi]) / TWO_PI
    rows, zs = [], []
    dt = 2.5e-4
    while len(rows) < n_points:
        f = float(rng.uniform(520.0, 800.0))
        if np.min(np.abs(lines - f)) < 15.0:
            continue
        theta = float(rng.uniform(0.0, math.pi))
        cfg = McConfig(dt=dt, t_total=t_total, n_traj=n_traj, seed=int(rng.integers(2**63)),
                       burn_in=burn / t_total, threads=threads)
        pg = output_spectrum_estimate(F, D, cfg, theta)
        i = int(np.argmin(np.abs(pg.freq_hz - f)))
        f_bin = float(pg.freq_hz[i])
        expected = float(sampled_spectrum(lambda w: markovian_spectrum(d, s, w, theta, F_an).S,
                                          TWO_PI * f_bin, dt)[0])
        z = (pg.S_est[i] - expected) / pg.stderr[i]
        zs.append(z)
        rows.append([f_bin, math.degrees(theta), float(pg.S_est[i]), float(pg.stderr[i]), expected, float(z)])
    return {"name": "spectrum_vs_periodogram", "passed": bool(np.max(np.abs(zs)) <= 3.0),
            "max_abs_z": float(np.max(np.abs(zs))), "rows": rows}


def cmd_mc_check(args) -> int:
    if args.spectrum_points < 0 or args.spectrum_traj < 2:
        raise UsageError("--spectrum-points must be >= 0 and --spectrum-traj >= 2")
    cfg = _config(args, ENTANGLEMENT, ENTANGLEMENT)
    p, d, s = _resolve(cfg, default_ratio=ENTANGLEMENT_DETUNING_RATIO)
    F = build_drift(d, s)
    D = noise_model(d).D
    corrupt = args.inject_fault == "drift"
    mc_cfg = McConfig(dt=args.dt, t_total=args.t_total, n_traj=args.n_traj, seed=args.seed, threads=args.threads)
    cov = covariance_check(F, D, mc_cfg, _corrupt(F) if corrupt else F)
    checks = [cov]
    out = Path(args.out)
    tables = []
    if not cov.get("skipped_covariance"):
        rows = [[i, j, cov["V"][i, j], cov["V_est"][i, j], cov["stderr"][i, j], cov["z"][i, j]]
                for i in range(8) for j in range(8)]
        tables.append(Table("mc_covariance", ["i", "j", "V_lyapunov", "V_est", "stderr", "z"], rows))
    if args.spectrum_points:
        spec = spectrum_check(SQUEEZING, args.seed, n_points=args.spectrum_points, n_traj=args.spectrum_traj,
                              corrupt=corrupt, threads=args.threads)
        tables.append(Table("mc_periodogram", ["omega_hz", "theta_deg", "S_est", "stderr", "S_markovian", "z"],
                            spec["rows"], comments=["spectrum check on the squeezing parameter set"]))
        checks.append(spec)
    else:
        print("note: spectrum check skipped (--spectrum-points 0)", file=sys.stderr)
    failures = [{"check": c["name"]} for c in checks if not c["passed"]]
    _write_tables(out, "mc-check", p, tables, {"seed": args.seed, "n_traj": args.n_traj,
                  "inject_fault": args.inject_fault}, failures, args._t0, with_plots=False)
    report = {c["name"]: {"passed": c["passed"], "max_abs_z": c.get("max_abs_z")} for c in checks}
    _emit(args, report)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}", file=sys.stderr)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_CHECK


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML parameter file")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=12345)
    common.add_argument("--json", action="store_true", help="machine-readable stdout")

    ap = argparse.ArgumentParser(prog="ringcavity", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("derive", parents=[common], help="print derived constants").set_defaults(fn=cmd_derive)

    sp = sub.add_parser("steady", parents=[common], help="steady state or bistability scan")
    sp.add_argument("--sweep", choices=["power", "detuning"])
    sp.add_argument("--start", type=float, default=0.01e-12)
    sp.add_argument("--stop", type=float, default=5e-12)
    sp.add_argument("--num", type=int, default=1001)
    sp.set_defaults(fn=cmd_steady)

    sp = sub.add_parser("stability-map", parents=[common], help="stability over (g_phi/G, omega_phi/omega_d)")
    sp.add_argument("--gmin", type=float, default=0.0)
    sp.add_argument("--gmax", type=float, default=50.0)
    sp.add_argument("--wmin", type=float, default=0.02)
    sp.add_argument("--wmax", type=float, default=3.0)
    sp.add_argument("--num", type=int, default=200)
    sp.set_defaults(fn=cmd_stability_map)

    sp = sub.add_parser("spectrum", parents=[common], help="homodyne PSD")
    sp.add_argument("--theta", type=float, nargs="+", default=[90.0], help="homodyne angle(s) in degrees")
    sp.add_argument("--fmin", type=float, default=500.0)
    sp.add_argument("--fmax", type=float, default=800.0)
    sp.add_argument("--num", type=int, default=4000)
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("squeeze-opt", parents=[common], help="optimised-angle PSD")
    sp.add_argument("--fmin", type=float, default=500.0)
    sp.add_argument("--fmax", type=float, default=800.0)
    sp.add_argument("--num", type=int, default=1000)
    sp.set_defaults(fn=cmd_squeeze_opt)

    sp = sub.add_parser("entangle-scan", parents=[common], help="entanglement measures along one parameter")
    sp.add_argument("--sweep", choices=SWEEPS, default="detuning")
    sp.add_argument("--start", type=float, default=-2.5)
    sp.add_argument("--stop", type=float, default=-0.2)
    sp.add_argument("--num", type=int, default=231)
    sp.add_argument("--detuning-ratio", type=float, default=ENTANGLEMENT_DETUNING_RATIO,
                    help="Delta'/omega_phi for non-detuning sweeps")
    sp.set_defaults(fn=cmd_entangle_scan)

    sp = sub.add_parser("figure", parents=[common], help="regenerate one figure's data and plot script")
    sp.add_argument("name", help=", ".join(FIGURES))
    sp.set_defaults(fn=cmd_figure)

    sp = sub.add_parser("mc-check", parents=[common], help="Monte-Carlo oracle comparison")
    sp.add_argument("--n-traj", type=int, default=10_000)
    sp.add_argument("--t-total", type=float, default=10.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--spectrum-points", type=int, default=5, help="random (omega, theta) points; 0 skips")
    sp.add_argument("--spectrum-traj", type=int, default=40)
    sp.add_argument("--inject-fault", choices=["drift"], default=None, help=argparse.SUPPRESS)
    sp.set_defaults(fn=cmd_mc_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    args._t0 = time.time()
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except (ConfigError, UsageError, McConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, UnstableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
