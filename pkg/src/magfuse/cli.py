"""Command-line interface.

Subcommands:

- ``gen``: synthesize a scenario trace CSV from a scenario config;
- ``run``: run one estimator over a trace and write the metrics CSV;
- ``sweep``: rerun a scenario at several database resolutions;
- ``detect-bench``: labeled distortion-detection benchmark;
- ``compare``: run several estimators on one trace, print a table.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiments
from .pipeline import ConfigError, ESTIMATORS, RunConfig, run_pipeline, write_metrics_csv
from .simgen import field_direction_fn, synthesize_trace
from .traces import MonotonicityError, ParseError, read_trace, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _load_mapping(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    return cfgmod.parse_config_file(path)


def _cmd_gen(args: argparse.Namespace) -> int:
    mapping = _load_mapping(args.config)
    if args.duration is not None:
        mapping["motion.duration"] = str(args.duration)
    if args.field is not None:
        mapping["field.variant"] = args.field
    if args.motion is not None:
        mapping["motion.variant"] = args.motion
    field, motion, noise = cfgmod.build_scenario_models(mapping, args.seed)
    trace = synthesize_trace(field, motion, noise=noise)
    write_trace(trace, args.out)
    print(f"wrote {len(trace)} samples to {args.out}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    mapping = _load_mapping(args.config)
    if args.estimator is not None:
        mapping["estimator"] = args.estimator
    if args.database is not None:
        mapping["database"] = args.database
    cfg = cfgmod.build_run_config(mapping, seed=args.seed)
    trace = read_trace(args.trace)
    report = run_pipeline(trace, cfg)
    write_metrics_csv(report, args.out)
    mean_err = report.aggregates.get("mean_ori_err_deg", float("nan"))
    print(
        f"{cfg.estimator}: mean orientation error {mean_err:.3f} deg over "
        f"{report.sim_seconds:.0f}s (wall {report.wall_seconds:.2f}s, "
        f"{report.wall_per_sim_second * 1e3:.2f} ms per simulated second)"
    )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    values = [float(v) for v in args.l_db.split(",")]
    seeds = list(range(args.seed, args.seed + args.n_seeds))
    rows = experiments.resolution_sweep(
        l_db_values=values, seeds=seeds, duration=args.duration
    )
    lines = ["l_db,mean_ori_err_deg"]
    for l_db, err in rows:
        lines.append(f"{l_db:.9g},{err:.9g}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    for l_db, err in rows:
        print(f"l_db={l_db:<6g} mean error {err:.3f} deg")
    return EXIT_OK


def _cmd_detect_bench(args: argparse.Namespace) -> int:
    stats = experiments.detection_benchmark(n_scenarios=args.n, seed=args.seed)
    lines = ["criterion,precision,recall,f1"]
    for name in ("A", "B", "AB"):
        s = stats[name]
        lines.append(f"{name},{s.precision:.9g},{s.recall:.9g},{s.f1:.9g}")
        print(f"{name:>2}: precision {s.precision:.4f} recall {s.recall:.4f} f1 {s.f1:.4f}")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    mapping = _load_mapping(args.config)
    estimators = args.estimators.split(",")
    for est in estimators:
        if est not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {est!r}")
    trace = read_trace(args.trace)
    lines = ["estimator,mean_ori_err_deg,mean_loc_err_m"]
    for est in estimators:
        mapping["estimator"] = est
        if est != "mdr":
            mapping["database"] = "off"
        cfg = cfgmod.build_run_config(mapping, seed=args.seed)
        report = run_pipeline(trace, cfg)
        ori = report.aggregates.get("mean_ori_err_deg", float("nan"))
        loc = report.aggregates.get("mean_loc_err_m", float("nan"))
        lines.append(f"{est},{ori:.9g},{loc:.9g}")
        print(f"{est:>8}: orientation {ori:7.3f} deg   location {loc:6.4f} m")
        mapping.pop("database", None)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magfuse",
        description="Distortion-resistant IMU orientation estimation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a scenario trace CSV")
    p.add_argument("--config", help="scenario config file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, help="override motion.duration")
    p.add_argument("--field", help="override field.variant")
    p.add_argument("--motion", help="override motion.variant")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run one estimator over a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--config", help="run config file")
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("--database", choices=("auto", "on", "off"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="database resolution sweep")
    p.add_argument("--l-db", dest="l_db", default="0.025,0.05,0.1,0.2,0.4")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-seeds", type=int, default=3)
    p.add_argument("--duration", type=float, default=300.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("detect-bench", help="distortion detection benchmark")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_detect_bench)

    p = sub.add_parser("compare", help="run several estimators on one trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--config")
    p.add_argument("--estimators", default="mdr,muse,avoid,gyro-acc")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, MonotonicityError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
