"""Batch command-line front end.

Subcommands: simulate | certify | synchronize | diagnose | reproduce.
All output is CSV with '#'-prefixed metadata lines; every run writes a
resolved configuration copy that reproduces it.  Exit codes: 0 success (or
required condition holds), 2 configuration error, 3 numerical failure,
4 required condition fails.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys

import numpy as np

from . import __version__
from .config import RunConfig, parse_config, parse_config_text
from .contraction import certify
from .diagnostics import (derivative_profile, esp_convergence, holder_exponent,
                          input_forgetting)
from .dynsys import observe_trajectory
from .errors import ConfigError, GsyncError, InsufficientPairs
from .gs import compare_gs, drive_gs, psi_iterate_gs, write_gs_csv
from .regions import InputRange

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CONDITION = 4

_SECTION_IV = """
system.kind = lorenz
system.h = 0.01
system.substeps = 8
system.initial = 0 1 1.05
system.n_steps = 4000
observation.kind = projection
observation.indices = 0
statemap.kind = power_sine
statemap.alpha = 0.9
statemap.lambda = 0.009
statemap.k = 0.1
region.1.kind = box
region.1.lo = 0.9 0.9 0.9
region.1.hi = 1.1 1.1 1.1
region.1.label = V1
region.2.kind = box
region.2.lo = -1.1 0.9 0.9
region.2.hi = -0.9 1.1 1.1
region.2.label = V2
run.washout = 2000
run.record = 2000
run.method = drive
"""


def _meta_lines(cfg: RunConfig, command: str, extra: dict | None = None) -> list[str]:
    meta = {"tool": f"gsync {__version__}", "command": command,
            "seed": str(cfg.seed)}
    if extra:
        meta.update({k: str(v) for k, v in extra.items()})
    return [f"# {k}: {v}" for k, v in meta.items()]


def _write_csv(path: str, meta: list[str], header: list[str], rows) -> None:
    with open(path, "w") as fh:
        for line in meta:
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _prepare_out(cfg: RunConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.cfg"), "w") as fh:
        fh.write(cfg.resolved_text())


def _phase_names(cfg: RunConfig) -> list[str]:
    if getattr(cfg.system, "name", "") == "lorenz":
        return ["u", "v", "w"]
    return [f"m{i+1}" for i in range(cfg.system.phase_dim)]


def _times(cfg: RunConfig, indices: np.ndarray) -> np.ndarray:
    scale = cfg.time_scale
    return indices * scale if scale is not None else indices.astype(float)


def cmd_simulate(cfg: RunConfig, out_dir: str) -> int:
    _prepare_out(cfg, out_dir)
    traj = cfg.system.trajectory(cfg.initial, cfg.n_steps)
    z = observe_trajectory(cfg.observation, traj)
    names = _phase_names(cfg)
    obs_names = ["obs"] if z.shape[1] == 1 else [f"obs{i+1}" for i in range(z.shape[1])]
    times = _times(cfg, traj.times)
    rows = ([_fmt(times[i])] + [_fmt(c) for c in traj.points[i]] + [_fmt(c) for c in z[i]]
            for i in range(len(traj)))
    path = os.path.join(out_dir, "trajectory.csv")
    _write_csv(path, _meta_lines(cfg, "simulate", {"rows": len(traj)}),
               ["t"] + names + obs_names, rows)
    print(f"simulate: wrote {len(traj)} rows to {path}")
    return EXIT_OK


def _require_statemap(cfg: RunConfig):
    if cfg.statemap is None:
        raise ConfigError("this command requires a statemap.* section")
    if not cfg.regions:
        raise ConfigError("this command requires at least one region.N.* section")


def cmd_certify(cfg: RunConfig, out_dir: str, require: str | None) -> int:
    _require_statemap(cfg)
    _prepare_out(cfg, out_dir)
    traj = cfg.system.trajectory(cfg.initial, cfg.n_steps)
    certs = []
    for region in cfg.regions:
        cert = certify(cfg.statemap, region, cfg.system, cfg.observation,
                       traj.points, resolution=cfg.grid_resolution,
                       n_inputs=cfg.input_samples, rng=cfg.seed)
        certs.append(cert)

    report_path = os.path.join(out_dir, "certificates.txt")
    with open(report_path, "w") as fh:
        for cert in certs:
            fh.write(cert.report_text() + "\n\n")
    csv_path = os.path.join(out_dir, "certificates.csv")
    with open(csv_path, "w") as fh:
        for line in _meta_lines(cfg, "certify", {"require": require or "none"}):
            fh.write(line + "\n")
        fh.write(certs[0].csv_header() + "\n")
        for cert in certs:
            fh.write(cert.csv_row() + "\n")

    for cert in certs:
        print(f"certify[{cert.region_label}]: esp_ok={cert.esp_ok} "
              f"diff_ok={cert.diff_ok} l_fx={cert.bounds.l_fx:.6g} "
              f"margin={cert.invariance_margin:.3g}")
    if require is not None and not all(c.condition_holds(require) for c in certs):
        print(f"certify: required condition {require!r} FAILS", file=_sys.stderr)
        return EXIT_CONDITION
    return EXIT_OK


def cmd_synchronize(cfg: RunConfig, out_dir: str, method: str | None) -> int:
    _require_statemap(cfg)
    method = method or cfg.method
    _prepare_out(cfg, out_dir)
    total = cfg.washout + cfg.record
    traj = cfg.system.trajectory(cfg.initial, max(cfg.n_steps, total))
    z = observe_trajectory(cfg.observation, traj)
    input_range = InputRange.from_observations(z)
    record_from = cfg.psi_record_from if cfg.psi_record_from is not None else cfg.washout

    agreements = []
    for region in cfg.regions:
        produced = {}
        if method in ("drive", "both"):
            gs = drive_gs(cfg.statemap, cfg.system, cfg.observation, cfg.initial,
                          region.center(), washout_steps=cfg.washout,
                          record_steps=cfg.record, region=region, trajectory=traj)
            produced["drive"] = gs
        if method in ("psi", "both"):
            analytic = cfg.statemap.analytic_lipschitz(region, input_range)
            l_fx = analytic["l_fx"] if analytic and analytic["l_fx"] < 1.0 else None
            gs = psi_iterate_gs(cfg.statemap, cfg.system, cfg.observation, traj,
                                region.center(), tol=cfg.tol, max_iters=cfg.max_iters,
                                record_from=record_from, region=region, l_fx=l_fx)
            produced["psi"] = gs
        for name, gs in produced.items():
            path = os.path.join(out_dir, f"gs_{region.label}_{name}.csv")
            write_gs_csv(gs, path, F=cfg.statemap, obs=cfg.observation,
                         metadata={"tool": f"gsync {__version__}", "seed": cfg.seed},
                         time_scale=cfg.time_scale)
            print(f"synchronize[{region.label}/{name}]: wrote {len(gs)} rows to {path}")
        if method == "both":
            sup = compare_gs(produced["drive"], produced["psi"])
            agreements.append((region.label, sup))
            print(f"synchronize[{region.label}]: drive/psi sup distance {sup:.3e}")

    if agreements:
        path = os.path.join(out_dir, "agreement.csv")
        _write_csv(path, _meta_lines(cfg, "synchronize", {"method": "both"}),
                   ["region", "sup_distance"],
                   ([label, _fmt(sup)] for label, sup in agreements))
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig, out_dir: str) -> int:
    _require_statemap(cfg)
    _prepare_out(cfg, out_dir)
    region = cfg.regions[0]
    total = cfg.washout + cfg.record
    traj = cfg.system.trajectory(cfg.initial, max(cfg.n_steps, total))
    z = observe_trajectory(cfg.observation, traj)
    input_range = InputRange.from_observations(z)
    rng = np.random.default_rng(cfg.seed)
    analytic = cfg.statemap.analytic_lipschitz(region, input_range)
    l_fx = analytic["l_fx"] if analytic else float("nan")

    # state convergence from two region points under the observed inputs
    x0a, x0b = region.sample(2, rng)
    n_esp = min(500, len(z) - 1)
    dists = esp_convergence(cfg.statemap, z[1:n_esp + 1], x0a, x0b)
    _write_csv(os.path.join(out_dir, "esp.csv"),
               _meta_lines(cfg, "diagnose", {"l_fx": _fmt(l_fx)}),
               ["t", "distance"],
               ([str(t), _fmt(d)] for t, d in enumerate(dists)))

    rows = []
    for k in cfg.forgetting_k:
        worst = input_forgetting(cfg.statemap, region, input_range, k,
                                 trials=cfg.forgetting_trials, rng=rng)
        bound = (l_fx ** k) * region.diameter() + 1e-12 if np.isfinite(l_fx) else float("nan")
        rows.append([str(k), _fmt(worst), _fmt(bound)])
        print(f"diagnose: forgetting k={k} max={worst:.3e} bound={bound:.3e}")
    _write_csv(os.path.join(out_dir, "forgetting.csv"),
               _meta_lines(cfg, "diagnose", {"trials": cfg.forgetting_trials}),
               ["k", "max_distance", "bound"], rows)

    gs = drive_gs(cfg.statemap, cfg.system, cfg.observation, cfg.initial,
                  region.center(), washout_steps=cfg.washout,
                  record_steps=cfg.record, region=region, trajectory=traj)
    try:
        prof = derivative_profile(gs, pair_budget=cfg.pair_budget, rng=cfg.seed)
        bins_meta = {
            "bin_edges": " ".join(_fmt(e) for e in prof.bin_edges),
            "bin_counts": " ".join(str(c) for c in prof.bin_counts),
            "bin_max_slope": " ".join(_fmt(s) for s in prof.bin_max_slope),
        }
        _write_csv(os.path.join(out_dir, "slopes.csv"),
                   _meta_lines(cfg, "diagnose", bins_meta),
                   ["i", "j", "dm", "df", "slope"],
                   ([str(p[0]), str(p[1]), _fmt(a), _fmt(b), _fmt(s)]
                    for p, a, b, s in zip(prof.pairs, prof.dm, prof.df, prof.slopes)))
        fit = holder_exponent(gs, pair_budget=cfg.pair_budget, rng=cfg.seed)
        _write_csv(os.path.join(out_dir, "holder.csv"),
                   _meta_lines(cfg, "diagnose"),
                   ["gamma", "r_squared", "n_pairs", "window_lo", "window_hi",
                    "dropped_zero_pairs"],
                   [[_fmt(fit.gamma), _fmt(fit.r_squared), str(fit.n_pairs),
                     _fmt(fit.window[0]), _fmt(fit.window[1]),
                     str(fit.dropped_zero_pairs)]])
        print(f"diagnose: holder gamma={fit.gamma:.4f} r2={fit.r_squared:.4f}")
    except InsufficientPairs as exc:
        print(f"diagnose: regularity probes skipped ({exc})", file=_sys.stderr)
    return EXIT_OK


def section_iv_config() -> RunConfig:
    """The built-in Lorenz demonstration configuration."""
    return parse_config_text(_SECTION_IV)


def cmd_reproduce(figure: str, out_dir: str, seed: int | None) -> int:
    cfg = section_iv_config()
    if seed is not None:
        cfg.seed = seed
        cfg.resolved["run.seed"] = str(seed)
    _prepare_out(cfg, out_dir)
    h = cfg.time_scale
    # rows with time in (20, 40]: step indices 2001..4000
    sel = np.arange(cfg.washout + 1, cfg.n_steps + 1)
    path = os.path.join(out_dir, f"{figure}.csv")
    traj = None
    if figure in ("fig1", "fig2", "fig4"):
        traj = cfg.system.trajectory(cfg.initial, cfg.n_steps)

    if figure == "fig1":
        rows = ([_fmt(i * h)] + [_fmt(c) for c in traj.points[i]] for i in sel)
        _write_csv(path, _meta_lines(cfg, "reproduce", {"figure": "fig1", "rows": len(sel)}),
                   ["t", "u", "v", "w"], rows)
    elif figure == "fig2":
        z = observe_trajectory(cfg.observation, traj)
        rows = ([_fmt(i * h), _fmt(z[i, 0])] for i in sel)
        _write_csv(path, _meta_lines(cfg, "reproduce", {"figure": "fig2", "rows": len(sel)}),
                   ["t", "obs"], rows)
    elif figure == "fig3":
        # autonomous one-step displacement at the x3 = 1 cross-section
        alpha = cfg.statemap.alpha
        grid = np.linspace(-1.5, 1.5, 41)
        fixed = ["(1, 1)", "(-1, 1)", "(1, -1)", "(-1, -1)"]
        rows = []
        for x1 in grid:
            for x2 in grid:
                d1 = np.sign(x1) * abs(x1) ** alpha - x1
                d2 = np.sign(x2) * abs(x2) ** alpha - x2
                rows.append([_fmt(x1), _fmt(x2), _fmt(d1), _fmt(d2)])
        _write_csv(path, _meta_lines(cfg, "reproduce",
                                     {"figure": "fig3", "cross_section": "x3 = 1",
                                      "lambda": "0",
                                      "stable_fixed_points": "; ".join(fixed)}),
                   ["x1", "x2", "dx1", "dx2"], rows)
    elif figure == "fig4":
        rows = []
        for branch, region in enumerate(cfg.regions, start=1):
            gs = drive_gs(cfg.statemap, cfg.system, cfg.observation, cfg.initial,
                          region.center(), washout_steps=cfg.washout,
                          record_steps=cfg.record, region=region, trajectory=traj)
            for i in range(1, len(gs)):  # drop t = washout to keep t in (20, 40]
                rows.append([_fmt(gs.times[i] * h), str(branch)]
                            + [_fmt(c) for c in gs.values[i]])
        _write_csv(path, _meta_lines(cfg, "reproduce",
                                     {"figure": "fig4",
                                      "branches": " ".join(r.label for r in cfg.regions)}),
                   ["t", "branch", "f1", "f2", "f3"], rows)
    else:
        raise ConfigError(f"unknown figure {figure!r}; choose fig1..fig4")
    print(f"reproduce: wrote {path}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsync",
        description="Construct, certify, and diagnose generalized synchronizations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")

    common(sub.add_parser("simulate", help="integrate and write the trajectory"))
    p = sub.add_parser("certify", help="invariance + contraction certificates")
    common(p)
    p.add_argument("--require", choices=("esp", "diff"),
                   help="exit 0 iff this condition holds on every region")
    p = sub.add_parser("synchronize", help="construct sampled synchronizations")
    common(p)
    p.add_argument("--method", choices=("drive", "psi", "both"),
                   help="override run.method")
    common(sub.add_parser("diagnose", help="convergence/forgetting/regularity probes"))
    p = sub.add_parser("reproduce", help="emit the built-in demonstration figure data")
    p.add_argument("--figure", required=True, choices=("fig1", "fig2", "fig3", "fig4"))
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.figure, args.out, args.seed)
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.resolved["run.seed"] = str(args.seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        if args.command == "certify":
            return cmd_certify(cfg, args.out, args.require)
        if args.command == "synchronize":
            return cmd_synchronize(cfg, args.out, args.method)
        if args.command == "diagnose":
            return cmd_diagnose(cfg, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except GsyncError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
