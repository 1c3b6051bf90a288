"""Command-line front end.

Subcommands
-----------
analyze      : pole lattice, weight windows, domain, admissibility and
               interpolation report as JSON
solve        : time-step the configured equation, writing a trajectory
               CSV (and optional field snapshots)
verify       : run one of the property suites and print a pass/fail table
asymptotics  : fit tip slopes of a completed solve against the predicted
               decay roots

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical abort.  ``CONETOOL_THREADS`` caps per-mode solver threads.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, grid_from_config, initial_field_from_config, \
    load_config, solver_config_from_config, spectrum_from_config, \
    weight_config_from_config
from .diagnostics import NoSignalError, fit_amplitude_series
from .evolve import BlowUpError, LinearSolveError, PositivityLossError, run
from .mellin import MellinSymbol, UnderResolvedSpectrumError, indicial_roots, \
    poles_of_inverse
from .reporting import ManifestWriter, write_json, write_loglog_svg, \
    write_slope_table, write_snapshots, write_trajectory_csv
from .verification import SUITES, run_suite
from .weights import IncompatibleDomainError, WeightOnPoleError, build_domain, \
    check_hinfty_admissible, gamma_window, interpolation_descriptor, pq_feasible

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

FEASIBILITY_MODE = {"pme": "pme", "fpme": "fpme", "cahn_hilliard": "ch"}


def _fail_config(message):
    print(f"config error: {message}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_analyze(args):
    cfg = load_config(args.config)
    window = (cfg["pole_window_lo"], cfg["pole_window_hi"])
    spec = spectrum_from_config(cfg, for_window=window)
    wcfg = weight_config_from_config(cfg)
    warnings = []

    sym2 = MellinSymbol(spec, 2)
    sym4 = MellinSymbol(spec, 4)
    lat2 = poles_of_inverse(sym2, window)
    hi4 = min(window[1], indicial_roots(spec.dim_n, spec.eigenvalues[-1])[1] - 2.0)
    lat4 = poles_of_inverse(sym4, (window[0], hi4))

    windows = {}
    for mode in ("constants", "all_modes", "bilaplacian"):
        gw = gamma_window(lat2, wcfg.n, mode)
        windows[mode] = gw.to_json_dict()
        if gw.empty:
            warnings.append(f"{mode} weight window is empty")

    flavor = cfg["domain_flavor"]
    mu = 4 if flavor == "bilaplacian" else 2
    report = {
        "spectrum": spec.to_json_dict(),
        "weight": {"n": wcfg.n, "s": wcfg.s, "gamma": wcfg.gamma,
                   "p": wcfg.p, "q": wcfg.q},
        "poles": [p.to_json_dict() for p in lat2.poles],
        "poles_order4": [p.to_json_dict() for p in lat4.poles],
        "windows": windows,
        "domain": None,
        "hinfty": None,
        "interpolation": None,
        "feasibility": None,
        "warnings": warnings,
    }
    try:
        dom = build_domain(wcfg, flavor, mu, lat2 if mu == 2 else lat4)
        report["domain"] = dom.to_json_dict()
        if mu == 2:
            report["hinfty"] = check_hinfty_admissible(dom, wcfg, lat2).to_json_dict()
            report["interpolation"] = interpolation_descriptor(
                wcfg, dom, lat2, epsilon=cfg["interp_epsilon"]).to_json_dict()
    except (WeightOnPoleError, IncompatibleDomainError) as exc:
        warnings.append(f"domain not built: {exc}")

    fmode = FEASIBILITY_MODE.get(cfg["equation"])
    if fmode is not None:
        report["feasibility"] = pq_feasible(
            wcfg, fmode,
            sigma=cfg["sigma"] if fmode == "fpme" else None).to_json_dict()

    manifest = ManifestWriter("analyze", args.out, cfg.as_dict(), seed=args.seed)
    write_json(manifest.path("analysis.json"), report)
    manifest.finish({"warnings": warnings, "poles": len(lat2.poles)})
    for w in warnings:
        print(f"warning: {w}")
    print(f"analysis written to {os.path.join(args.out, 'analysis.json')}")
    return EXIT_OK


def cmd_solve(args):
    cfg = load_config(args.config)
    scfg = solver_config_from_config(cfg)
    wcfg = weight_config_from_config(cfg)

    fmode = FEASIBILITY_MODE.get(scfg.equation)
    if fmode is not None:
        report = pq_feasible(wcfg, fmode,
                             sigma=scfg.sigma if fmode == "fpme" else None)
        if not report.ok and not args.force:
            for c in report.checks:
                if not c.ok:
                    rel = "<" if c.strict else "<="
                    print(f"infeasible integrability parameters "
                          f"[{c.name}]: {c.value:g} must be {rel} {c.bound:g} "
                          f"(slack {c.slack:g}); use --force to run anyway",
                          file=sys.stderr)
            return EXIT_CONFIG
        if not report.ok:
            print("warning: integrability gate overridden by --force")

    grid = grid_from_config(cfg)
    u0 = initial_field_from_config(cfg, grid, seed=args.seed)
    fit_modes = tuple(cfg["fit_modes"])
    fw_lo = cfg["fit_window_lo"] or 3.0 * cfg["x_min"]
    fw_hi = cfg["fit_window_hi"] or 30.0 * cfg["x_min"]

    manifest = ManifestWriter("solve", args.out, cfg.as_dict(), seed=args.seed)
    try:
        traj = run(grid, u0, scfg, save_every=args.save_every,
                   keep_snapshots=cfg["keep_snapshots"],
                   slope_modes=fit_modes, fit_window=(fw_lo, fw_hi))
    except (BlowUpError, PositivityLossError, LinearSolveError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        manifest.finish({"status": "aborted", "reason": str(exc)})
        return EXIT_NUMERIC

    write_trajectory_csv(manifest.path("trajectory.csv"), traj)
    if cfg["keep_snapshots"]:
        for p in write_snapshots(args.out, traj):
            manifest.register(p)
    m0 = traj.rows[0]["mass"]
    mend = traj.rows[-1]["mass"]
    summary = {
        "status": "completed",
        "steps": int(round(scfg.t_end / scfg.dt)),
        "t_end": traj.times[-1],
        "mass_drift_rel": abs(mend - m0) / max(1e-300, abs(m0)),
        "final_min": traj.rows[-1]["min"],
        "final_max": traj.rows[-1]["max"],
    }
    manifest.finish(summary)
    print(f"trajectory written to {os.path.join(args.out, 'trajectory.csv')}")
    return EXIT_OK


def cmd_verify(args):
    manifest = ManifestWriter("verify", args.out, {"suite": args.suite},
                              seed=args.seed)
    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    failures = [r for r in results if not r.ok]
    manifest.finish({
        "suite": args.suite,
        "checks": len(results),
        "failures": len(failures),
    })
    print(f"{len(results) - len(failures)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failures else EXIT_OK


def cmd_asymptotics(args):
    run_dir = args.run or args.out
    manifest_path = os.path.join(run_dir, "manifest.json")
    index_path = os.path.join(run_dir, "snapshots", "index.json")
    if not os.path.exists(manifest_path):
        return _fail_config(f"no manifest.json in {run_dir}; run solve first")
    if not os.path.exists(index_path):
        return _fail_config(
            f"no snapshots in {run_dir}; re-run solve with keep_snapshots = true")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        solve_manifest = json.load(fh)
    cfg_values = solve_manifest["config"]
    with open(index_path, "r", encoding="utf-8") as fh:
        index = json.load(fh)
    last = os.path.join(run_dir, index[-1]["file"])
    data = np.genfromtxt(last, delimiter=",", names=True)
    x = np.asarray(data["x"], dtype=float)

    from .config import RunConfig
    cfg = RunConfig(values=cfg_values)
    spec = spectrum_from_config(cfg)
    fw_lo = cfg_values.get("fit_window_lo") or 3.0 * cfg_values["x_min"]
    fw_hi = cfg_values.get("fit_window_hi") or 30.0 * cfg_values["x_min"]

    rows = []
    curves = []
    any_fit = False
    for j in range(spec.n_modes):
        amp = np.asarray(data[f"mode_{j}"], dtype=float)
        predicted = abs(indicial_roots(spec.dim_n, spec.eigenvalues[j])[0])
        curves.append((f"mode {j}", amp))
        try:
            fit = fit_amplitude_series(x, amp, (fw_lo, fw_hi), label=f"mode {j}")
        except NoSignalError:
            rows.append({"mode": j, "predicted": predicted, "fitted": "",
                         "rel_error": "", "stderr": "", "note": "no signal"})
            continue
        except ValueError as exc:
            return _fail_config(str(exc))
        rel = abs(abs(fit.slope) - predicted) / predicted if predicted else ""
        rows.append({"mode": j, "predicted": predicted, "fitted": fit.slope,
                     "rel_error": rel, "stderr": fit.stderr, "note": ""})
        any_fit = True

    manifest = ManifestWriter("asymptotics", args.out, dict(cfg_values),
                              seed=args.seed)
    write_slope_table(manifest.path("slopes.csv"), rows)
    if args.plot:
        from .grid import build_cone_grid

        grid = build_cone_grid(spec, n_x=len(x), x_min=cfg_values["x_min"])
        write_loglog_svg(manifest.path("slopes.svg"), grid, curves)
    manifest.finish({"modes": len(rows), "fitted": any_fit})
    for r in rows:
        fitted = f"{r['fitted']:.4f}" if r["fitted"] != "" else "-"
        print(f"mode {r['mode']}: predicted {r['predicted']:g}, "
              f"fitted {fitted} {r['note']}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="conetool",
        description="weight/domain calculus and evolution solvers on the "
                    "straight model cone")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config):
        if needs_config:
            p.add_argument("--config", required=True, help="flat key=value file")
        p.add_argument("--out", default="conetool-out", help="output directory")
        p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("analyze", help="pole/window/domain report")
    common(p, True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("solve", help="time-step the configured equation")
    common(p, True)
    p.add_argument("--force", action="store_true",
                   help="run despite a failed integrability gate")
    p.add_argument("--save-every", type=int, default=1,
                   help="record diagnostics every K steps")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    common(p, False)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("asymptotics", help="tip slopes of a completed solve")
    common(p, False)
    p.add_argument("--run", default=None,
                   help="directory of the completed solve (defaults to --out)")
    p.add_argument("--plot", action="store_true", help="emit an SVG log-log plot")
    p.set_defaults(fn=cmd_asymptotics)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnderResolvedSpectrumError, WeightOnPoleError,
            IncompatibleDomainError, FileNotFoundError) as exc:
        return _fail_config(str(exc))


if __name__ == "__main__":
    sys.exit(main())
