"""Command-line driver for scenario generation, placement search and sweeps.

Subcommands: gen, eval, grid, hc, ga, gop, sumrate, surface, sweep.
Exit codes: 0 ok, 2 config error, 3 I/O error, 4 internal contract violation.

All numeric outputs are deterministic for a fixed config and seed; the
``--threads`` knob only changes wall time. Measured wall times are therefore
reported on stdout and in the run summary, never inside result CSVs (records
carry a zero placeholder in the ``wall_s`` column so repeated runs stay
byte-identical).
"""

from __future__ import annotations

import argparse
import copy
import math
import sys
import time

import yaml

from . import metrics_io
from .metrics_io import ExperimentRecord, SurfacePoint
from .placement import (FeasibleSet, GaParams, HcParams, PlacementResult,
                        build_evaluator, genetic_search, greedy_offload_placement,
                        grid_search, hill_climb, sumrate_placement, sweep_grid)
from .scenario import (ConfigError, ScenarioConfig, apply_overrides, config_from_dict,
                       config_hash, default_config_path, generate_instances,
                       load_config, load_trace, write_trace)

_SWEEP_DEFAULTS = {
    "servers": ("servers.count", [2, 3, 4, 5, 6, 7]),
    "capacity": ("servers.capacity", [1, 2, 3, 4, 5, 6]),
    "rate": ("traffic.arrival_rate_per_s", [0.3, 0.5, 0.7, 0.9]),
    "flops": ("system.flops_per_task", [5e12, 10e12, 20e12, 40e12]),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risvec",
        description="RIS placement and task offloading experiments")
    parser.add_argument("--config", default=None, help="scenario config file (YAML)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="dotted config override, repeatable")
    parser.add_argument("--out", default=None, help="output file path")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", help="sample instances and write them as a trace table")

    p_eval = sub.add_parser("eval", help="score one placement")
    p_eval.add_argument("--h", type=float, required=True, help="altitude in meters")
    p_eval.add_argument("--theta-deg", type=float, required=True, help="tilt in degrees")

    for name, help_text in [("grid", "exhaustive grid search"),
                            ("hc", "hill climbing search"),
                            ("ga", "genetic search"),
                            ("gop", "greedy-offloading grid search"),
                            ("sumrate", "sum-rate-centric grid search")]:
        sub.add_parser(name, help=help_text)

    sub.add_parser("surface", help="emit the full throughput surface as CSV")

    p_sweep = sub.add_parser("sweep", help="vary one parameter across all schemes")
    p_sweep.add_argument("parameter", choices=sorted(_SWEEP_DEFAULTS),
                         help="swept parameter family")
    p_sweep.add_argument("--values", default=None,
                         help="comma-separated values overriding the default sweep")
    return parser


def _load_cfg(args) -> tuple[ScenarioConfig, dict]:
    path = args.config or default_config_path()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    apply_overrides(raw, args.overrides)
    if args.seed is not None:
        raw.setdefault("traffic", {})["master_seed"] = args.seed
    return config_from_dict(raw), raw


def _result_line(name: str, res: PlacementResult) -> str:
    return (f"scheme={name} h_m={res.placement.altitude_m:.12g} "
            f"theta_deg={math.degrees(res.placement.tilt_rad):.12g} "
            f"throughput={res.avg_throughput:.12g} evals={res.evaluations} "
            f"wall_s={res.wall_time_s:.3f}")


def _run_scheme(name: str, cfg: ScenarioConfig, evaluator, fset: FeasibleSet,
                threads: int) -> PlacementResult:
    seed = cfg.master_seed
    if name == "OP":
        return grid_search(fset, [], cfg.servers, cfg.system, evaluator=evaluator,
                           threads=threads)
    if name == "HC":
        return hill_climb(fset, HcParams(seed=seed), [], cfg.servers, cfg.system,
                          evaluator=evaluator)
    if name == "GAP":
        return genetic_search(fset, GaParams(seed=seed), [], cfg.servers, cfg.system,
                              evaluator=evaluator)
    if name == "GOP":
        return greedy_offload_placement(fset, [], cfg.servers, cfg.system,
                                        evaluator=evaluator, threads=threads)
    if name == "SUMRATE":
        return sumrate_placement(fset, [], cfg.servers, cfg.system,
                                 evaluator=evaluator, threads=threads)
    raise ValueError(f"unknown scheme {name}")


def run(args) -> int:
    cfg, raw = _load_cfg(args)

    if args.command == "gen":
        if not args.out:
            raise ConfigError("gen requires --out for the trace file")
        instances = generate_instances(cfg)
        write_trace(instances, args.out)
        print(f"wrote {sum(len(i.vehicles) for i in instances)} vehicles "
              f"across {len(instances)} instances to {args.out}")
        return 0

    instances = generate_instances(cfg)
    evaluator = build_evaluator(instances, list(cfg.servers), cfg.system,
                                cfg.ris_xy, cfg.master_seed)
    fset = FeasibleSet.from_bounds(cfg.bounds)

    if args.command == "eval":
        tilt = math.radians(args.theta_deg)
        value = evaluator.throughput(args.h, tilt)
        print(f"h_m={args.h:.12g} theta_deg={args.theta_deg:.12g} "
              f"throughput={value:.12g}")
        return 0

    if args.command == "surface":
        if not args.out:
            raise ConfigError("surface requires --out for the CSV path")
        start = time.perf_counter()
        scores = sweep_grid(fset, evaluator, "optimal", threads=args.threads)
        points = [SurfacePoint(h, math.degrees(t), v) for h, t, v in scores]
        metrics_io.write_surface(points, args.out)
        print(f"wrote {len(points)} surface points to {args.out} "
              f"in {time.perf_counter() - start:.1f} s")
        return 0

    scheme_by_command = {"grid": "OP", "hc": "HC", "ga": "GAP",
                         "gop": "GOP", "sumrate": "SUMRATE"}
    if args.command in scheme_by_command:
        name = scheme_by_command[args.command]
        res = _run_scheme(name, cfg, evaluator, fset, args.threads)
        print(_result_line(name, res))
        if args.out:
            record = ExperimentRecord(
                scheme=name, param="none", value=0.0,
                avg_throughput=res.avg_throughput,
                altitude_m=res.placement.altitude_m,
                tilt_deg=math.degrees(res.placement.tilt_rad),
                wall_time_s=0.0, seed=cfg.master_seed)
            metrics_io.write_records([record], args.out)
        return 0

    if args.command == "sweep":
        key, values = _SWEEP_DEFAULTS[args.parameter]
        if args.values is not None:
            values = [float(v) for v in args.values.split(",")]
        records: list[ExperimentRecord] = []
        summary: list[str] = []
        for value in values:
            raw_point = apply_overrides(copy.deepcopy(raw), [f"{key}={value}"])
            cfg_point = config_from_dict(raw_point)
            instances_point = generate_instances(cfg_point)
            ev = build_evaluator(instances_point, list(cfg_point.servers),
                                 cfg_point.system, cfg_point.ris_xy,
                                 cfg_point.master_seed)
            for name in metrics_io.SCHEMES:
                res = _run_scheme(name, cfg_point, ev, fset, args.threads)
                records.append(ExperimentRecord(
                    scheme=name, param=args.parameter, value=float(value),
                    avg_throughput=res.avg_throughput,
                    altitude_m=res.placement.altitude_m,
                    tilt_deg=math.degrees(res.placement.tilt_rad),
                    wall_time_s=0.0, seed=cfg_point.master_seed))
                summary.append(f"{args.parameter}={value} {_result_line(name, res)}")
                print(summary[-1])
        if args.out:
            metrics_io.write_records(records, args.out)
            metrics_io.write_run_summary(args.out + ".summary",
                                         config_hash(raw), cfg.master_seed, summary)
        return 0

    raise ConfigError(f"unknown command {args.command}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # contract violations and internal failures
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
