"""Batch experiment runner.

Subcommands mirror the study shapes: ``solve`` (one run with its
convergence trace), ``sweep`` (one parameter over a range, optionally
crossed with a second), ``benchmark`` (schemes versus power budget) and
``rmse`` (Monte Carlo localization versus the bound).  All CSV output
uses shortest round-trip decimals, UTF-8 and LF endings, and is
byte-reproducible for fixed inputs; wall-clock timing goes to the run
manifest instead, which is written atomically after all other files.

Exit codes: 0 ok, 1 solver abort, 2 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace as _dc_replace
from pathlib import Path

import numpy as np

from . import __version__, baselines, driver, montecarlo
from .control import ControlError, StabilityError
from .scenario import (Scenario, ScenarioError, dbw_to_watts, default_scenario,
                       load_scenario_file, save_scenario)

SWEEPABLE = ("pmax_dbw", "sigma_w", "blocklength", "eta")
SCHEMES = ("proposed", "equal_power", "random_positioning", "water_filling",
           "sensing_only")


class InputError(Exception):
    pass


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out_dir: Path, scen: Scenario, seed, outputs: list[str],
                    wall_time: float) -> None:
    manifest = {
        "command": " ".join(sys.argv),
        "scenario_sha256": hashlib.sha256(
            save_scenario(scen).encode()).hexdigest(),
        "seed": seed,
        "version": __version__,
        "wall_time": wall_time,
        "outputs": outputs,
        "schema_version": 1,
    }
    tmp = out_dir / "manifest.json.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, out_dir / "manifest.json")


def _load(args) -> Scenario:
    if args.scenario is not None:
        path = Path(args.scenario)
        if not path.exists():
            raise InputError(f"scenario file not found: {path}")
        scen = load_scenario_file(path)
    else:
        scen = default_scenario()
    if getattr(args, "eta", None) is not None:
        scen = _dc_replace(scen,
                           weights=_dc_replace(scen.weights, eta=args.eta))
    if getattr(args, "seed", None) is not None:
        scen = _dc_replace(scen, seed=args.seed)
    if getattr(args, "literal_bandwidth", False):
        scen = _dc_replace(scen, rf=_dc_replace(
            scen.rf, uses_per_step=scen.rf.bandwidth))
    if getattr(args, "rate_convention", None) is not None:
        scen = _dc_replace(scen, rf=_dc_replace(
            scen.rf, rate_convention=args.rate_convention))
    return scen


def apply_param(scen: Scenario, param: str, value: float) -> Scenario:
    """Scenario variant with one swept parameter replaced."""
    if param == "pmax_dbw":
        return _dc_replace(scen, rf=_dc_replace(scen.rf,
                                                p_max=dbw_to_watts(value)))
    if param == "sigma_w":
        return _dc_replace(scen, plant_cfg=_dc_replace(scen.plant_cfg,
                                                       sigma_w2=value))
    if param == "blocklength":
        return _dc_replace(scen, rf=_dc_replace(scen.rf, blocklength=value))
    if param == "eta":
        return _dc_replace(scen, weights=_dc_replace(scen.weights, eta=value))
    raise InputError(f"unknown sweep parameter {param!r}; "
                     f"choose from {', '.join(SWEEPABLE)}")


def run_scheme(scheme: str, scen: Scenario) -> driver.SolveReport:
    if scheme == "proposed":
        return driver.solve(scen)
    return getattr(baselines, scheme)(scen)


def _report_row(report: driver.SolveReport) -> list:
    last = report.iterations[-1]
    return [last.lqr_sum, last.det_fim, last.crb_sum, last.objective,
            len(report.iterations) - 1]


def cmd_solve(args) -> int:
    scen = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    report = driver.solve(scen)
    rows = [[i, it.objective, it.lqr_sum, it.det_fim, it.crb_sum]
            for i, it in enumerate(report.iterations)]
    _write_csv(out / "trace.csv",
               ["iter", "objective", "lqr_sum", "det_fim", "crb_sum"], rows)
    decision = {
        "theta": report.final.theta.tolist(),
        "p": report.final.p.tolist(),
        "positions": report.final.positions.tolist(),
        "per_robot_cost": [float(c) for c in report.per_robot_cost],
        "objective": report.iterations[-1].objective,
        "converged": report.converged,
        "seed": report.seed,
        "scheme": report.scheme,
    }
    with open(out / "decision.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(decision, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, scen, scen.seed, ["trace.csv", "decision.json"],
                    time.perf_counter() - start)
    return 0


def _sweep_values(args) -> list[float]:
    if args.steps < 1:
        raise InputError("steps must be at least 1")
    if args.steps == 1:
        return [args.from_]
    return list(np.linspace(args.from_, args.to, args.steps))


def cmd_sweep(args) -> int:
    scen = _load(args)
    values = _sweep_values(args)
    values2 = ([float(v) for v in args.values2.split(",")]
               if args.values2 else None)
    if values2 is not None and args.param2 is None:
        raise InputError("--values2 requires --param2")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()

    header = ["value", "seed", "lqr_sum", "det_fim", "crb_sum", "objective",
              "iters"]
    if values2 is not None:
        header.insert(1, "value2")
    rows = []
    for value in values:
        for v2 in (values2 or [None]):
            variant = apply_param(scen, args.param, value)
            if v2 is not None:
                variant = apply_param(variant, args.param2, v2)
            for seed in range(args.seeds):
                run = _dc_replace(variant, seed=seed)
                report = run_scheme(args.scheme, run)
                row = [value, seed, *_report_row(report)]
                if v2 is not None:
                    row.insert(1, v2)
                rows.append(row)
    _write_csv(out / "sweep.csv", header, rows)
    _write_manifest(out, scen, list(range(args.seeds)), ["sweep.csv"],
                    time.perf_counter() - start)
    return 0


def cmd_benchmark(args) -> int:
    scen = _load(args)
    schemes = [s.strip() for s in args.schemes.split(",")]
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise InputError(f"unknown scheme {scheme!r}; "
                             f"choose from {', '.join(SCHEMES)}")
    values = _sweep_values(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows = []
    for scheme in schemes:
        for value in values:
            variant = apply_param(scen, "pmax_dbw", value)
            for seed in range(args.seeds):
                report = run_scheme(scheme, _dc_replace(variant, seed=seed))
                rows.append([scheme, value, seed, *_report_row(report)])
    with open(out / "benchmark.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("scheme,value,seed,lqr_sum,det_fim,crb_sum,objective,iters\n")
        for row in rows:
            fh.write(row[0] + "," + ",".join(_fmt(v) for v in row[1:]) + "\n")
    _write_manifest(out, scen, list(range(args.seeds)), ["benchmark.csv"],
                    time.perf_counter() - start)
    return 0


def cmd_rmse(args) -> int:
    scen = _load(args)
    values = _sweep_values(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows = []
    for value in values:
        variant = apply_param(scen, "pmax_dbw", value)
        for seed in range(args.seeds):
            run = _dc_replace(variant, seed=seed)
            report = driver.solve(run)
            result = montecarlo.rmse_experiment(report.final, run,
                                                args.trials, seed)
            sens = baselines.sensing_only(run)
            sens_crb = sens.iterations[-1].crb_sum
            rows.append([value, seed, result.crb_sqrt ** 2, result.rmse,
                         result.failures, sens_crb])
    _write_csv(out / "rmse.csv",
               ["pmax_dbw", "seed", "crb_sum", "rmse", "failures",
                "sensing_only_crb_sum"], rows)
    _write_manifest(out, scen, list(range(args.seeds)), ["rmse.csv"],
                    time.perf_counter() - start)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uav-codesign",
        description="Multi-UAV sensing/communication/control co-design "
                    "experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="scenario TOML file (default: "
                                          "built-in defaults)")
        p.add_argument("--eta", type=float, help="override the trade-off weight")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--literal-bandwidth", action="store_true",
                       help="use one control step per second of bandwidth "
                            "(uses_per_step = B)")
        p.add_argument("--rate-convention", choices=("bits", "nats"),
                       help="dispersion penalty units")

    p_solve = sub.add_parser("solve", help="single run with trace")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=SWEEPABLE)
    p_sweep.add_argument("--from", dest="from_", type=float, required=True)
    p_sweep.add_argument("--to", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--seeds", type=int, default=1)
    p_sweep.add_argument("--param2", choices=SWEEPABLE,
                         help="optional second axis")
    p_sweep.add_argument("--values2",
                         help="comma-separated values for --param2")
    p_sweep.add_argument("--scheme", default="proposed", choices=SCHEMES)
    p_sweep.set_defaults(func=cmd_sweep)

    p_bench = sub.add_parser("benchmark", help="schemes versus power budget")
    common(p_bench)
    p_bench.add_argument("--schemes", default=",".join(SCHEMES[:4]))
    p_bench.add_argument("--from", dest="from_", type=float, default=-3.0)
    p_bench.add_argument("--to", type=float, default=0.0)
    p_bench.add_argument("--steps", type=int, default=4)
    p_bench.add_argument("--seeds", type=int, default=1)
    p_bench.set_defaults(func=cmd_benchmark)

    p_rmse = sub.add_parser("rmse", help="Monte Carlo localization error")
    common(p_rmse)
    p_rmse.add_argument("--trials", type=int, default=100)
    p_rmse.add_argument("--from", dest="from_", type=float, default=-3.0)
    p_rmse.add_argument("--to", type=float, default=0.0)
    p_rmse.add_argument("--steps", type=int, default=4)
    p_rmse.add_argument("--seeds", type=int, default=1)
    p_rmse.set_defaults(func=cmd_rmse)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ControlError, StabilityError, RuntimeError) as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
