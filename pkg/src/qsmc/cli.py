"""Command-line front end: ``qsmc {design,simulate,verify,compare,plot-script}``.

Exit codes: 0 all checks pass, 1 checks failed, 2 usage/config error,
3 numerical abort.
"""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from .config import EXAMPLE_CONFIGS, ConfigError, ExperimentConfig, example_config, load_config, parse_config
from .envelope import reaching_time_bound, suggest_rho0, validate_c2
from .plants import validate_assumptions
from .sim import (
    SimulationAbort, chattering_index, compute_metrics, measure_reaching_time, simulate, steady_state_window,
    verify_guarantees, write_metrics,
)
from .surface import is_hurwitz, tracking_bound

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

VERIFY_SETS = {
    "example1": ["example1"],
    "example2": ["example2", "example2-binomial"],
}


def _fmt(v, spec=".6g"):
    return "n/a" if v is None else format(v, spec)


# ---------------------------------------------------------------- design

def design_report(cfg: ExperimentConfig) -> dict:
    """All design-time checks for a config, as a JSON-ready dict with a ``passed`` flag."""
    surface, env, n = cfg.surface, cfg.envelope, cfg.plant.order
    hurwitz_eig = is_hurwitz(surface.coeffs, "eigen")
    hurwitz_routh = is_hurwitz(surface.coeffs, "routh")
    c2 = validate_c2(env)
    t_bound = reaching_time_bound(env) if env.epsilon > env.rho_inf else None

    ics = []
    for i, ic in enumerate(cfg.initial_conditions):
        rep = validate_assumptions(cfg.plant, cfg.reference, ic, surface, env)
        ics.append({"index": i, "x0": list(ic.x0), "sigma0": rep.sigma0, "c1": rep.c1_ok, "assumptions": rep.as_dict()})

    declared = cfg.initial_conditions[0].error_bounds
    if declared is not None:
        bounds, source = list(declared), "declared error bounds"
    else:
        errs = np.abs([ic["assumptions"]["initial_error"] for ic in ics])
        bounds, source = errs.max(axis=0).tolist(), "largest initial errors over the listed initial conditions"
    suggested = suggest_rho0(surface, bounds)

    tracking = None
    if surface.pole is not None:
        tracking = [tracking_bound(surface, env.epsilon, i) for i in range(n)]

    checks = {
        "hurwitz": hurwitz_eig and hurwitz_routh,
        "c2": c2,
        "c1": all(ic["c1"] for ic in ics),
        "assumptions": all(ic["assumptions"]["ok"] for ic in ics),
    }
    return {
        "name": cfg.name,
        "order": n,
        "surface": {"coeffs": list(surface.coeffs), "pole": surface.pole,
                    "hurwitz": {"eigen": hurwitz_eig, "routh": hurwitz_routh}},
        "envelope": {"rho0": env.rho0, "rho_inf": env.rho_inf, "mu": env.mu, "epsilon": env.epsilon, "c2": c2},
        "reaching_time_bound": t_bound,
        "suggested_rho0": {"value": suggested, "bounds": bounds, "source": source,
                           "degenerate": suggested == 0},
        "tracking_bounds": tracking,
        "initial_conditions": ics,
        "checks": checks,
        "passed": all(checks.values()),
    }


def _design_text(rep: dict) -> str:
    env, surf = rep["envelope"], rep["surface"]
    lines = [
        f"design: {rep['name']} (order {rep['order']})",
        f"  surface coeffs      {surf['coeffs']}" + (f"  (pole a={surf['pole']:g})" if surf["pole"] else ""),
        f"  Hurwitz             {'yes' if rep['checks']['hurwitz'] else 'NO'}"
        f" (eigen={surf['hurwitz']['eigen']}, routh={surf['hurwitz']['routh']})",
        f"  envelope            rho(t) = {env['rho0']:g} exp(-{env['mu']:g} t) + {env['rho_inf']:g}, epsilon={env['epsilon']:g}",
        f"  C2 rho_inf<eps<rho0 {'pass' if env['c2'] else 'FAIL'}",
        f"  reaching-time bound {_fmt(rep['reaching_time_bound'], '.4f')} s",
        f"  suggested rho0      {rep['suggested_rho0']['value']:.6g} (from {rep['suggested_rho0']['source']})",
    ]
    if rep["tracking_bounds"] is not None:
        tb = ", ".join(f"|e{i}|<{b:.6g}" for i, b in enumerate(rep["tracking_bounds"]))
        lines.append(f"  tracking bounds     {tb}")
    else:
        lines.append("  tracking bounds     n/a (explicit coefficients, no pole)")
    for ic in rep["initial_conditions"]:
        a = ic["assumptions"]
        lines.append(
            f"  ic {ic['index']}: x0={ic['x0']} e(0)={[round(v, 6) for v in a['initial_error']]} "
            f"sigma(0)={ic['sigma0']:.6g} C1 {'pass' if ic['c1'] else 'FAIL'}; "
            f"d bound: {a['dist_bound_status']}"
        )
        for issue in a["issues"]:
            lines.append(f"      ! {issue}")
    lines.append(f"  result: {'all checks pass' if rep['passed'] else 'CHECKS FAILED'}")
    return "\n".join(lines)


def cmd_design(args) -> int:
    cfg = _load(args)
    rep = design_report(cfg)
    if args.json:
        print(json.dumps(rep, indent=2))
    else:
        print(_design_text(rep))
    out = args.out or cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "design.json"), "w") as fh:
            json.dump(rep, fh, indent=2)
    return EXIT_OK if rep["passed"] else EXIT_FAILED


# ---------------------------------------------------------------- simulate / verify

def _run_all(cfg: ExperimentConfig, out_dir=None, prefix="", extra_meta=None):
    """Simulate every initial condition; returns a list of per-run result dicts."""
    law = cfg.qsmc_law()
    results = []
    for i, ic in enumerate(cfg.initial_conditions):
        aborted = None
        try:
            traj = simulate(cfg.plant, cfg.reference, law, ic, cfg.sim)
        except SimulationAbort as exc:
            traj, aborted = exc.trajectory, str(exc)
        meta = dict(traj.metadata, **(extra_meta or {}))
        if aborted:
            meta["aborted"] = aborted
        run = {"index": i, "x0": list(ic.x0), "trajectory": traj, "aborted": aborted, "metrics": None, "report": None}
        if not aborted or len(traj) >= 2:
            run["metrics"] = compute_metrics(traj, cfg.envelope.epsilon)
            run["report"] = verify_guarantees(traj, cfg.envelope, cfg.surface)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            traj.to_csv(os.path.join(out_dir, f"{prefix}traj_{i}.csv"))
            if run["metrics"] is not None:
                write_metrics(os.path.join(out_dir, f"{prefix}metrics_{i}.json"), run["metrics"], run["report"], meta)
            else:
                with open(os.path.join(out_dir, f"{prefix}metrics_{i}.json"), "w") as fh:
                    json.dump({"metadata": meta}, fh, indent=2, default=str)
        results.append(run)
    return results


def _clause_cell(c):
    if c.status == "skipped":
        return "skipped"
    if c.name == "band":
        return f"{c.status} (max|s|/rho={c.value:.3f})"
    if c.name == "reaching":
        return f"{c.status} ({_fmt(c.value, '.3f')}<={_fmt(c.bound, '.4f')})"
    return f"{c.status} ({c.value:.3g}<={c.bound:.3g})"


def _table(results) -> str:
    lines = [f"  {'ic':>2}  {'x0':<22} {'band':<26} {'reaching':<24} tracking"]
    for r in results:
        x0 = "[" + ", ".join(f"{v:g}" for v in r["x0"]) + "]"
        if r["report"] is None:
            lines.append(f"  {r['index']:>2}  {x0:<22} ABORTED: {r['aborted']}")
            continue
        cells = [_clause_cell(r["report"].clause(name)) for name in ("band", "reaching", "tracking")]
        line = f"  {r['index']:>2}  {x0:<22} {cells[0]:<26} {cells[1]:<24} {cells[2]}"
        if r["aborted"]:
            line += f"  ABORTED: {r['aborted']}"
        lines.append(line)
    return "\n".join(lines)


def _status(results) -> int:
    if any(r["aborted"] for r in results):
        return EXIT_ABORT
    if all(r["report"].passed for r in results):
        return EXIT_OK
    return EXIT_FAILED


def cmd_simulate(args) -> int:
    cfg = _load(args)
    rep = design_report(cfg)
    extra = {"seed": args.seed} if args.seed is not None else {}
    if not rep["passed"]:
        failed = [k for k, ok in rep["checks"].items() if not ok]
        if not args.force:
            print(f"design checks failed ({', '.join(failed)}); refusing to simulate (use --force)", file=sys.stderr)
            return EXIT_FAILED
        print(f"WARNING: design checks failed ({', '.join(failed)}); guarantees void")
        extra["guarantees"] = "void"
    out = args.out or cfg.out_dir or "qsmc-out"
    results = _run_all(cfg, out, extra_meta=extra)
    print(f"{cfg.name}: {len(results)} run(s), dt={cfg.sim.dt:g}, T={cfg.sim.horizon:g}, "
          f"mode={cfg.sim.control_mode}; outputs in {out}")
    print(_table(results))
    for r in results:
        m = r["metrics"]
        if m is not None and r["trajectory"].metadata.get("saturation_activations"):
            print(f"  note: ic {r['index']} hit u_max {r['trajectory'].metadata['saturation_activations']} time(s)")
    return _status(results)


def cmd_verify(args) -> int:
    status = EXIT_OK
    for name in VERIFY_SETS[args.example]:
        cfg = _apply_overrides(parse_config(example_config(name)), args)
        env = cfg.envelope
        out = os.path.join(args.out, name) if args.out else None
        results = _run_all(cfg, out)
        print(f"{name}: surface {list(cfg.surface.coeffs)}, rho(t) = {env.rho0:g} exp(-{env.mu:g} t) + "
              f"{env.rho_inf:g}, epsilon={env.epsilon:g}, reaching-time bound {reaching_time_bound(env):.4f} s")
        print(_table(results))
        status = max(status, _status(results))
    print("verify:", {EXIT_OK: "all clauses pass", EXIT_FAILED: "CLAUSES FAILED", EXIT_ABORT: "ABORTED"}[status])
    return status


# ---------------------------------------------------------------- compare

def compare_report(cfg: ExperimentConfig, gain: float, ic_index: int = 0, window: float = 2.0) -> dict:
    """Run the QSM law and a relay baseline from one initial condition and summarise both."""
    ic = cfg.initial_conditions[ic_index]
    eps = cfg.envelope.epsilon
    out = {"initial_condition": list(ic.x0), "baseline_gain": gain, "window_start": window, "runs": {}}
    for label, law in (("qsmc", cfg.qsmc_law()), ("baseline", cfg.baseline_law(gain))):
        try:
            traj = simulate(cfg.plant, cfg.reference, law, ic, cfg.sim, envelope=cfg.envelope)
            aborted = None
        except SimulationAbort as exc:
            traj, aborted = exc.trajectory, str(exc)
        tv, switches = chattering_index(traj, window)
        t_hat = measure_reaching_time(traj, eps)
        out["runs"][label] = {
            "chattering_tv": tv,
            "switch_count": switches,
            "control_peak": float(np.max(np.abs(traj.u))),
            "steady_state_error": float(np.max(np.abs(traj.e[steady_state_window(traj), 0]))),
            "reaching_time": t_hat,
            "reached": t_hat is not None,
            "aborted": aborted,
            "trajectory": traj,
        }
    q, b = out["runs"]["qsmc"], out["runs"]["baseline"]
    out["tv_ratio"] = q["chattering_tv"] / b["chattering_tv"] if b["chattering_tv"] > 0 else None
    out["switch_ratio"] = q["switch_count"] / b["switch_count"] if b["switch_count"] > 0 else None
    return out


def cmd_compare(args) -> int:
    cfg = _load(args)
    gain = args.gain if args.gain is not None else cfg.baseline_gain
    if not gain > 0:
        print("baseline gain K must be positive", file=sys.stderr)
        return EXIT_USAGE
    if not 0 <= args.ic < len(cfg.initial_conditions):
        print(f"--ic must lie in 0..{len(cfg.initial_conditions) - 1}", file=sys.stderr)
        return EXIT_USAGE
    rep = compare_report(cfg, gain, args.ic, args.window)
    q, b = rep["runs"]["qsmc"], rep["runs"]["baseline"]
    print(f"{cfg.name}: QSMC vs relay SMC (K={gain:g}) from x0={rep['initial_condition']}, window t>={args.window:g}")
    print(f"  {'':<20} {'qsmc':>14} {'baseline':>14}")
    for key in ("chattering_tv", "switch_count", "control_peak", "steady_state_error", "reaching_time"):
        print(f"  {key:<20} {_fmt(q[key]):>14} {_fmt(b[key]):>14}")
    print(f"  tv ratio qsmc/baseline = {_fmt(rep['tv_ratio'])}, switch ratio = {_fmt(rep['switch_ratio'])}")
    if not b["reached"]:
        print(f"  note: baseline did not reach the epsilon={cfg.envelope.epsilon:g} band")
    if not q["reached"]:
        print(f"  note: QSMC did not reach the epsilon={cfg.envelope.epsilon:g} band")
    out = args.out or cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
        doc = {k: v for k, v in rep.items() if k != "runs"}
        doc["runs"] = {}
        for label, run in rep["runs"].items():
            run["trajectory"].to_csv(os.path.join(out, f"compare_{label}.csv"))
            doc["runs"][label] = {k: v for k, v in run.items() if k != "trajectory"}
        with open(os.path.join(out, "compare.json"), "w") as fh:
            json.dump(doc, fh, indent=2)
    if q["aborted"] or b["aborted"]:
        for label in ("qsmc", "baseline"):
            if rep["runs"][label]["aborted"]:
                print(f"  {label} aborted: {rep['runs'][label]['aborted']}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


# ---------------------------------------------------------------- plot script

def plot_script(csv_paths) -> str:
    """gnuplot script plotting output tracking, error, input and the sliding band."""
    lines = ["set datafile separator ','", "set key autotitle columnhead", "set terminal pngcairo size 900,1200",
             "set output 'qsmc.png'", "set multiplot layout 4,1"]
    panels = [
        ("output y vs y_des", lambda p: [f"'{p}' using 't':'x1' with lines", f"'{p}' using 't':'ydes' with lines dt 2"]),
        ("tracking error e0", lambda p: [f"'{p}' using 't':'e0' with lines"]),
        ("control input u", lambda p: [f"'{p}' using 't':'u' with lines"]),
        ("sliding variable and tube", lambda p: [f"'{p}' using 't':'sigma' with lines",
                                                 f"'{p}' using 't':'rho' with lines lc 'black' dt 3",
                                                 f"'{p}' using 't':(-column('rho')) with lines lc 'black' dt 3 notitle"]),
    ]
    for title, series in panels:
        lines.append(f"set title '{title}'")
        lines.append("plot " + ", \\\n     ".join(s for p in csv_paths for s in series(p)))
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def cmd_plot_script(args) -> int:
    out = args.out or "qsmc-out"
    paths = sorted(glob.glob(os.path.join(out, "*traj_*.csv")))
    if not paths:
        print(f"no trajectory CSVs found in {out}", file=sys.stderr)
        return EXIT_USAGE
    target = os.path.join(out, "plot.gp")
    with open(target, "w") as fh:
        fh.write(plot_script([os.path.basename(p) for p in paths]))
    print(f"wrote {target} (run: cd {out} && gnuplot plot.gp)")
    return EXIT_OK


# ---------------------------------------------------------------- plumbing

def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {"dt": args.dt, "horizon": args.horizon, "control_mode": args.mode}
    if any(v is not None for v in changes.values()):
        cfg = cfg.with_sim(**changes)
    return cfg


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config", f"required (a JSON path or one of {sorted(EXAMPLE_CONFIGS)})")
    return _apply_overrides(load_config(args.config), args)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config path, or one of {', '.join(sorted(EXAMPLE_CONFIGS))}")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dt", type=float, help="integration step override")
    common.add_argument("--horizon", type=float, help="simulation horizon override")
    common.add_argument("--mode", choices=["continuous", "zoh"], help="control evaluation mode")
    common.add_argument("--force", action="store_true", help="run even if design conditions fail")
    common.add_argument("--seed", type=int, help="reserved; runs are deterministic")

    parser = argparse.ArgumentParser(prog="qsmc", description="Quasi-sliding-mode control laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("design", parents=[common], help="check a design without simulating")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_design)
    p = sub.add_parser("simulate", parents=[common], help="simulate every initial condition")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("verify", parents=[common], help="reproduce a bundled example")
    p.add_argument("example", choices=sorted(VERIFY_SETS))
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("compare", parents=[common], help="QSM law vs relay SMC chattering")
    p.add_argument("--gain", "-K", type=float, help="relay gain K (default from config, else 5)")
    p.add_argument("--ic", type=int, default=0, help="initial condition index")
    p.add_argument("--window", type=float, default=2.0, help="start of the chattering window")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("plot-script", parents=[common], help="write a gnuplot script for CSVs in --out")
    p.set_defaults(func=cmd_plot_script)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
