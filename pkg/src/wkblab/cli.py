"""Command-line entry point: ``wkblab {wkb,solve,inflate,lemma51,resonance}``.

Exit codes: 0 success, 2 a --check threshold failed, 3 configuration error,
4 numerical failure.  Reports are written through one ReportWriter per run;
snapshots use the WKBF format documented in :mod:`wkblab.reporting`.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import fit_power_law, lemma51_measure, scaling_eps
from .config import RunConfig, config_hash, default_config, parse_config, serialize
from .errors import ConfigError, WkbLabError
from .inflation import InflationReport, choose_tau, run_inflation
from .profiles import Profile
from .reporting import ReportRow, ReportWriter, stamp
from .solvers import SolverConfig, solve_kp
from .spectral import make_grid, set_tolerances
from .sweeps import kdv_runs, residual_sweep_kdv, residual_sweep_kp
from .wkb_kdv import resonance_table
from .wkb_kp import assemble_uapp_kp, build_kp_ansatz

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3, 4

RESIDUAL_SLOPE_MIN = {"kdv": 2.7, "kp": 2.5}
ERROR_SLOPE_MIN = 1.8


def _load(args) -> RunConfig:
    cfg = parse_config(Path(args.config).read_text()) if args.config else default_config(args.equation or "kdv")
    if args.equation and args.equation != cfg.equation:
        raise ConfigError(f"--equation {args.equation} contradicts the config ({cfg.equation})")
    set_tolerances(**cfg["tolerances"])
    return cfg


def _writer(args, cfg: RunConfig) -> ReportWriter:
    return ReportWriter(args.out or cfg["output"]["directory"], cfg["output"]["formats"])


def _meta(cfg: RunConfig, command: str, args) -> dict:
    return {"command": command, "version": __version__, "config_hash": config_hash(cfg),
            "seed": args.seed, "config": serialize(cfg)}


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def cmd_wkb(args) -> int:
    cfg = _load(args)
    if cfg.equation == "kdv":
        sweep = residual_sweep_kdv(cfg.profiles()[0], cfg.eps_list, jobs=args.jobs)
    else:
        sweep = residual_sweep_kp(cfg.profiles(), cfg.phase(), cfg.eps_list, jobs=args.jobs)
    floor = cfg["checks"]["residual_slope_min"] or RESIDUAL_SLOPE_MIN[cfg.equation]
    ok = sweep.fit.slope >= floor
    rows = [ReportRow(e, "residual", v, "H^2_eps", 2.0) for e, v in zip(sweep.eps_list, sweep.values)]
    rows += [ReportRow(None, "residual_slope", sweep.fit.slope, "H^2_eps", 2.0, _status(ok)),
             ReportRow(None, "residual_r_squared", sweep.fit.r_squared, "", None)]
    _writer(args, cfg).write_report("wkb", stamp(rows, config_hash(cfg)), _meta(cfg, "wkb", args))
    print(f"residual slope {sweep.fit.slope:.3f} (r^2 {sweep.fit.r_squared:.4f}), required >= {floor}")
    return EXIT_THRESHOLD if args.check and not ok else EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load(args)
    writer = _writer(args, cfg)
    sv = cfg["solver"]
    solver = SolverConfig(dt_factor=sv["dt_factor"], richardson=sv["richardson"], max_halvings=sv["max_halvings"])
    drift_max = cfg["checks"]["drift_max"]
    rows, ok = [], True
    stride = cfg["output"]["snapshot_stride"]
    if cfg.equation == "kdv":
        profile = cfg.profiles()[0]
        eps_list = cfg.eps_list
        runs = kdv_runs(profile, eps_list, solver, sv["final_time"], stride > 0, jobs=args.jobs)
        for e, (err, info) in zip(eps_list, runs):
            rows.append(ReportRow(e, "wkb_error", err, "H^2_eps", 2.0))
            ok &= _diagnostic_rows(rows, e, info, drift_max)
            if stride > 0:
                _dump_snapshots(writer, info["trajectory"], e, stride, f"kdv_N{round(1 / e)}")
        if len(eps_list) >= 3:
            fit = fit_power_law(eps_list, [err for err, _ in runs])
            floor = cfg["checks"]["error_slope_min"] or ERROR_SLOPE_MIN
            ok &= fit.slope >= floor
            rows.append(ReportRow(None, "wkb_error_slope", fit.slope, "H^2_eps", 2.0, _status(fit.slope >= floor)))
    else:
        phase = cfg.phase()
        for e in cfg.eps_list:
            ansatz = build_kp_ansatz(cfg.profiles(), phase, e)
            grid = make_grid(round(1 / e), cfg["grid"]["oversample"], k1=phase.k1, k2=phase.k2)
            tau = sv["final_time"] if sv["final_time"] is not None else choose_tau(cfg.profiles()[0], phase.speed)
            traj = solve_kp(assemble_uapp_kp(ansatz, 0.0, grid), phase, e, replace(solver, final_time=tau),
                            reference=lambda t: assemble_uapp_kp(ansatz, t, grid))
            info = {"bootstrap_max": traj.bootstrap_max, "mass_drift": traj.mass_drift,
                    "l2_drift": traj.l2_drift, "richardson_diff": traj.richardson_diff}
            ok &= _diagnostic_rows(rows, e, info, drift_max)
            if stride > 0:
                _dump_snapshots(writer, traj, e, stride, f"kp_N{round(1 / e)}")
    writer.write_report("solve", stamp(rows, config_hash(cfg)), _meta(cfg, "solve", args))
    for r in rows:
        print(",".join(r.cells()[:6]))
    return EXIT_THRESHOLD if args.check and not ok else EXIT_OK


def _diagnostic_rows(rows: list, eps: float, info: dict, drift_max: float) -> bool:
    drift_ok = info["mass_drift"] <= drift_max and info["l2_drift"] <= drift_max
    rows.append(ReportRow(eps, "mass_drift", info["mass_drift"], "", None, _status(info["mass_drift"] <= drift_max)))
    rows.append(ReportRow(eps, "l2_drift", info["l2_drift"], "L2", 0.0, _status(info["l2_drift"] <= drift_max)))
    rows.append(ReportRow(eps, "richardson_diff", info["richardson_diff"], "L2", 0.0))
    boot = info["bootstrap_max"]
    rows.append(ReportRow(eps, "bootstrap_max", boot, "Linf", None, "ok" if boot <= 1 else "flagged"))
    return drift_ok


def _dump_snapshots(writer: ReportWriter, traj, eps: float, stride: int, stem: str) -> None:
    for i in range(0, len(traj.times), stride):
        writer.write_snapshot(f"{stem}_{i:04d}.wkbf", traj.snapshots[i].coeffs, eps, traj.times[i])


def inflation_rows(report: InflationReport) -> list[ReportRow]:
    cfg = report.config
    data_kind = "H^{s1,s2}" if cfg.equation == "kp" else "H^s"
    data_sigma = (cfg.s1, cfg.s2) if cfg.equation == "kp" else cfg.s1
    sig_kind = "H^{sigma1,sigma2}" if cfg.equation == "kp" else "H^sigma"
    rows = [ReportRow(None, "tau", report.tau), ReportRow(None, "amplitude_boost", report.amplitude_boost),
            ReportRow(None, "a0_floor", report.a0_floor, sig_kind)]
    for r in report.rows:
        if not r.ok:
            rows.append(ReportRow(r.eps, "row", float("nan"), "", None, r.status))
            continue
        rows.append(ReportRow(r.eps, "data_norm", r.data_norm, data_kind, data_sigma))
        for sig in cfg.sigma_list:
            rows.append(ReportRow(r.eps, "norm_v", r.sigma_norms[sig], sig_kind, sig))
            rows.append(ReportRow(r.eps, "ratio", r.ratios[sig], sig_kind, sig))
            rows.append(ReportRow(r.eps, "limit_error", r.limit_errors[sig], sig_kind, sig))
        rows.append(ReportRow(r.eps, "bootstrap_max", r.bootstrap_max, "Linf", None,
                              "ok" if r.bootstrap_max <= 1 else "flagged"))
        rows.append(ReportRow(r.eps, "mass_drift", r.mass_drift))
        rows.append(ReportRow(r.eps, "l2_drift", r.l2_drift, "L2", 0.0))
    if report.data_fit is not None:
        rows.append(ReportRow(None, "data_slope", report.data_fit.slope, data_kind, data_sigma,
                              _status(report.checks.get("data_slope", True))))
        for sig, fit in report.ratio_fits.items():
            rows.append(ReportRow(None, "ratio_slope", fit.slope, sig_kind, sig,
                                  _status(report.checks.get("ratio_slopes", True))))
        for sig, fit in report.limit_fits.items():
            rows.append(ReportRow(None, "limit_slope", fit.slope, sig_kind, sig))
    for name, ok in report.checks.items():
        rows.append(ReportRow(None, f"check:{name}", 1.0 if ok else 0.0, "", None, _status(ok)))
    return rows


def cmd_inflate(args) -> int:
    cfg = _load(args)
    report = run_inflation(cfg.inflation_config(), jobs=args.jobs)
    meta = _meta(cfg, "inflate", args)
    meta["warnings"] = report.warnings
    _writer(args, cfg).write_report("inflate", stamp(inflation_rows(report), config_hash(cfg)), meta)
    if report.data_fit is not None:
        ratios = ", ".join(f"{f.slope:.3f}" for f in report.ratio_fits.values())
        print(f"data slope {report.data_fit.slope:.3f}; ratio slopes {ratios}")
    for name, ok in report.checks.items():
        print(f"{name}: {_status(ok)}")
    for w in report.warnings:
        print(f"warning: {w}")
    return EXIT_THRESHOLD if args.check and not report.passed else EXIT_OK


def cmd_lemma51(args) -> int:
    cfg = _load(args)
    profile = Profile(0.0, 0.5, 1.0) if not args.config else cfg.profiles()[0]
    eps_list = scaling_eps(args.kappa)
    res = lemma51_measure(profile, args.beta, args.s, args.kappa, eps_list)
    ok = abs(res.fit.slope - res.predicted_exponent) <= 0.1
    sigma = args.s
    rows = [ReportRow(e, "norm", v, "H^s", sigma, res.note) for e, v in zip(eps_list, res.fit.values)]
    rows += [ReportRow(None, "fitted_exponent", res.fit.slope, "H^s", sigma, _status(ok)),
             ReportRow(None, "predicted_exponent", res.predicted_exponent, "H^s", sigma),
             ReportRow(None, "r_squared", res.fit.r_squared, "", None)]
    _writer(args, cfg).write_report("lemma51", stamp(rows, config_hash(cfg)), _meta(cfg, "lemma51", args))
    print(f"beta={args.beta} s={args.s} kappa={args.kappa}: fitted {res.fit.slope:.4f}, "
          f"predicted {res.predicted_exponent:.4f} ({res.note})")
    return EXIT_THRESHOLD if args.check and not ok else EXIT_OK


def cmd_resonance(args) -> int:
    pairs, triples = resonance_table(args.max)
    print("pair resonance (j + k)^3 = j^3 + k^3:")
    for j, k, hit in pairs:
        if j > 0 and k != 0 and abs(k) <= j:
            print(f"  ({j},{k}) {'resonant' if hit else 'non-resonant'}")
    print("resonant cubic triples (k1 + k2 + k3 = 0, k1^3 + k2^3 + k3^3 = 0):")
    for t in triples:
        print(f"  {t}")
    all_zero = all(0 in t for t in triples)
    print(f"every resonant triple contains a zero: {all_zero}")
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "resonance.json").write_text(json.dumps(
            {"pairs": [[j, k, hit] for j, k, hit in pairs], "triples": [list(t) for t in triples]}) + "\n")
    return EXIT_THRESHOLD if args.check and not all_zero else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--check", action="store_true", help="exit 2 when an acceptance threshold fails")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] directory)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for eps sweeps")
    common.add_argument("--seed", type=int, default=0, metavar="U64", help="recorded in report metadata")
    common.add_argument("--equation", choices=("kdv", "kp"), help="equation when no config is given")

    parser = argparse.ArgumentParser(prog="wkblab", description="WKB approximations and norm inflation for KdV and KP")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("wkb", parents=[common], help="residual sweep of the approximate solution").set_defaults(func=cmd_wkb)
    sub.add_parser("solve", parents=[common], help="solver runs and WKB error").set_defaults(func=cmd_solve)
    sub.add_parser("inflate", parents=[common], help="norm-inflation sweep").set_defaults(func=cmd_inflate)
    lem = sub.add_parser("lemma51", parents=[common], help="oscillatory-profile norm scaling")
    lem.add_argument("--beta", type=float, required=True)
    lem.add_argument("--s", type=float, required=True)
    lem.add_argument("--kappa", type=float, required=True)
    lem.set_defaults(func=cmd_lemma51)
    res = sub.add_parser("resonance", parents=[common], help="pair and triple resonance tables")
    res.add_argument("--max", type=int, default=5)
    res.set_defaults(func=cmd_resonance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WkbLabError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
