"""Command-line interface.

Subcommands: ``dist`` (generalized distance between two measure files),
``wasserstein`` (equal-mass W_p), ``oracle`` (brute-force grid bound),
``prokhorov`` (1-d comparator), ``verify`` (verification suites), and
``simulate`` (sample-and-hold runs with CSV/JSON outputs).

Exit codes: 0 success / all checks passed, 1 check failure, 2 usage or
input error.  ``GWASS_SEED`` overrides the default seed of random suites.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path


from . import lab
from .dynamics import (build_source_model, cauchy_table,
                       continuous_dependence_check, sample_and_hold)
from .flows import FlowConfig, build_velocity_model
from .gw import GwParams, gw_brute_force, gw_distance, levy_prokhorov_1d
from .measures import (DiscreteMeasure, load_measure, measure_from_json,
                       save_measure, total_mass)
from .transport import wasserstein

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class InputError(Exception):
    """Bad file, bad JSON, or inconsistent inputs: exit code 2."""


def _load(path: str) -> DiscreteMeasure:
    try:
        return load_measure(path)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read measure file {path}: {exc}") from exc
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse measure file {path}: {exc}") from exc


def _params(args) -> GwParams:
    try:
        return GwParams(args.a, args.b, args.p)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _write_plan_csv(plan, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "flow"])
        for i, j, flow in plan.entries:
            writer.writerow([i, j, repr(flow)])


def cmd_dist(args) -> int:
    mu = _load(args.mu)
    nu = _load(args.nu)
    try:
        result = gw_distance(mu, nu, _params(args), quantum=args.quantum)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    json.dump(result.to_json(), sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    if args.plan_csv:
        _write_plan_csv(result.plan, args.plan_csv)
    return EXIT_OK


def cmd_wasserstein(args) -> int:
    mu = _load(args.mu)
    nu = _load(args.nu)
    try:
        result = wasserstein(mu, nu, args.p, tol=args.tol)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    json.dump({"value": result.value, "p": result.p,
               "plan": result.plan.as_triples()}, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    if args.plan_csv:
        _write_plan_csv(result.plan, args.plan_csv)
    return EXIT_OK


def cmd_oracle(args) -> int:
    mu = _load(args.mu)
    nu = _load(args.nu)
    try:
        value = gw_brute_force(mu, nu, _params(args), args.grid_steps)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    json.dump({"value": value, "grid_steps": args.grid_steps}, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_prokhorov(args) -> int:
    mu = _load(args.mu)
    nu = _load(args.nu)
    try:
        value = levy_prokhorov_1d(mu, nu)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    json.dump({"value": value}, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        report = lab.run_suite(args.suite, seed=args.seed, trials=args.trials)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(report.format_table())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _validate_simulate_config(cfg: dict) -> list[str]:
    problems = []
    if "initial_measure" not in cfg:
        problems.append("initial_measure: missing (path or inline measure object)")
    if "velocity" not in cfg:
        problems.append("velocity: missing (base/kernel model description)")
    if "source" not in cfg:
        problems.append("source: missing (source model description)")
    level = cfg.get("level")
    if level is None or not isinstance(level, int) or level < 0:
        problems.append("level: must be a nonnegative integer")
    t_final = cfg.get("T", 1.0)
    if not isinstance(t_final, (int, float)) or t_final <= 0:
        problems.append("T: must be a positive number")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        problems.append("params: must be an object with a, b, p")
    k_range = cfg.get("k_range")
    if k_range is not None and (
            not isinstance(k_range, list) or len(k_range) != 2
            or not all(isinstance(k, int) for k in k_range) or k_range[0] > k_range[1]):
        problems.append("k_range: must be [k_min, k_max] with k_min <= k_max")
    dep = cfg.get("dependence")
    if dep is not None and (not isinstance(dep, dict) or "shift" not in dep):
        problems.append("dependence: must be an object with a 'shift' field")
    return problems


def cmd_simulate(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from exc
    problems = _validate_simulate_config(cfg)
    if problems:
        raise InputError("invalid config fields:\n  " + "\n  ".join(problems))

    init = cfg["initial_measure"]
    mu0 = _load(init) if isinstance(init, str) else measure_from_json(init)
    p_cfg = cfg.get("params", {})
    params = GwParams(p_cfg.get("a", 1.0), p_cfg.get("b", 1.0), p_cfg.get("p", 1.0))
    levels = [cfg["level"]]
    if cfg.get("k_range"):
        levels.append(cfg["k_range"][1] + 1)
    if cfg.get("dependence"):
        levels.append(int(cfg["dependence"].get("level", cfg["level"])))
    top_level = max(levels)
    try:
        source = build_source_model(cfg["source"])
        mass_cap = cfg.get("mass_cap", total_mass(mu0) + source.P)
        velocity = build_velocity_model(cfg["velocity"], params, mass_cap, dim=mu0.dim)
    except (KeyError, ValueError) as exc:
        raise InputError(f"invalid model config: {exc}") from exc
    t_final = float(cfg.get("T", 1.0))
    ode_step = cfg.get("ode_step", t_final / (1 << top_level))
    flow_cfg = FlowConfig(float(ode_step))
    max_level = int(cfg.get("max_level", 10))

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = sample_and_hold(mu0, velocity, source, t_final, cfg["level"],
                           flow_cfg, max_level)
    snapshot_files = []
    for n, (t, snap) in enumerate(traj.snapshots):
        name = f"snapshot_{n:04d}.json"
        save_measure(snap, out / name)
        snapshot_files.append(name)
    with open(out / "masses.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mass"])
        for t, snap in traj.snapshots:
            writer.writerow([repr(float(t)), repr(total_mass(snap))])

    summary = {
        "snapshots": snapshot_files,
        "level": cfg["level"],
        "T": t_final,
        "constants": {k: float(v) for k, v in sorted(traj.constants(params.p).items())},
    }
    if cfg.get("k_range"):
        k_min, k_max = cfg["k_range"]
        table = cauchy_table(mu0, velocity, source, t_final, k_min, k_max,
                             params, flow_cfg, max_level)
        with open(out / "cauchy.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "D_k", "bound"])
            for row in table.rows:
                writer.writerow([row.level, repr(row.d_k), repr(row.bound)])
        summary["cauchy_slope"] = table.slope
        summary["cauchy_rows"] = len(table.rows)
    if cfg.get("dependence"):
        dep = cfg["dependence"]
        shift = float(dep["shift"])
        shifted = DiscreteMeasure(mu0.dim, mu0.positions + shift, mu0.weights)
        rows = continuous_dependence_check(
            mu0, shifted, velocity, source, t_final,
            int(dep.get("level", cfg["level"])), params, flow_cfg, max_level)
        with open(out / "dependence.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "value", "bound"])
            for row in rows:
                writer.writerow([repr(row.t), repr(row.distance), repr(row.bound)])
        summary["dependence_rows"] = len(rows)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote {len(snapshot_files)} snapshots and summary.json to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwass",
        description="Mass-aware generalized Wasserstein distances and "
                    "sample-and-hold transport simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="generalized distance between two measure files")
    p.add_argument("mu"); p.add_argument("nu")
    p.add_argument("--a", type=float, required=True, help="removal unit cost")
    p.add_argument("--b", type=float, required=True, help="transport cost multiplier")
    p.add_argument("--p", type=float, default=1.0, help="cost exponent (>= 1)")
    p.add_argument("--quantum", type=float, default=1e-9)
    p.add_argument("--plan-csv", type=str, default=None,
                   help="also write the plan as (i, j, flow) CSV")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("wasserstein", help="equal-mass W_p between two measure files")
    p.add_argument("mu"); p.add_argument("nu")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9, help="allowed mass imbalance")
    p.add_argument("--plan-csv", type=str, default=None,
                   help="also write the plan as (i, j, flow) CSV")
    p.set_defaults(func=cmd_wasserstein)

    p = sub.add_parser("oracle", help="brute-force grid upper bound on tiny instances")
    p.add_argument("mu"); p.add_argument("nu")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--grid-steps", type=int, default=50)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("prokhorov", help="1-d comparator metric between probability measures")
    p.add_argument("mu"); p.add_argument("nu")
    p.set_defaults(func=cmd_prokhorov)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=lab.SUITE_NAMES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--json", type=str, default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run the sample-and-hold scheme from a JSON config")
    p.add_argument("config")
    p.add_argument("--output-dir", type=str, default="gwass_out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
