"""Command-line frontend.

Subcommands: ``lea`` (raster to distribution), ``cvp`` (validation
probability), ``error-curve``, ``moa`` (workforce sizing), ``ingest``
(trace file checking), ``simulate`` and ``sweep``. All output is CSV or
JSON-lines; plotting stays out of process. Exit codes: 0 success,
1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from trustsense import config as cfgmod
from trustsense import mobility, sim, traces
from trustsense.cvp import ValidationModel, p_validate, p_validate_by_sector
from trustsense.errmodel import error_curve
from trustsense.grid import BoundingBox, SectorGrid
from trustsense.moa import MopProblem, solve_mop
from trustsense.sim import ConfigError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

OUT_DIR_ENV = "TRUSTSENSE_OUT_DIR"

DataError = (
    ConfigError,
    traces.ParseError,
    traces.EmptyTraceSetError,
    mobility.AllWhiteMapError,
    mobility.EmptyTraceError,
    FileNotFoundError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems by default; the documented
    # contract is 1 for usage and 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_dist_source(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--dist", metavar="CSV", help="distribution CSV (prob column)")
    g.add_argument("--uniform", type=int, metavar="N", help="uniform distribution over N sectors")
    g.add_argument("--raster", metavar="PGM", help="road-popularity graymap")
    p.add_argument("--rows", type=int, help="grid rows (raster source)")
    p.add_argument("--cols", type=int, help="grid cols (raster source)")
    p.add_argument("--threshold", type=int, default=mobility.DEFAULT_BLACK_THRESHOLD,
                   help="black-pixel intensity cut (default %(default)s)")


def _load_dist(args) -> mobility.MobilityDistribution:
    if args.dist:
        with open(args.dist) as fh:
            return mobility.read_distribution_csv(fh)
    if args.uniform:
        return mobility.MobilityDistribution.uniform(args.uniform)
    if args.rows is None or args.cols is None:
        raise ConfigError("--raster needs --rows and --cols")
    from trustsense.grid import unit_grid

    raster = mobility.read_pgm(args.raster)
    return mobility.lea(raster, unit_grid(args.rows, args.cols), args.threshold)


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


# --- subcommands --------------------------------------------------------------

def _cmd_lea(args) -> int:
    from trustsense.grid import unit_grid

    raster = mobility.read_pgm(args.raster)
    dist = mobility.lea(raster, unit_grid(args.rows, args.cols), args.threshold)
    fh, close = _open_out(args.out)
    try:
        mobility.write_distribution_csv(dist, fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _cmd_cvp(args) -> int:
    dist = _load_dist(args)
    model = ValidationModel.identical(dist, args.mtps)
    per_sector = p_validate_by_sector(model)
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sector", "p_validate_given_sector"])
        for i, p in enumerate(per_sector):
            writer.writerow([i, repr(float(p))])
        writer.writerow(["p_validate", repr(p_validate(model))])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _cmd_error_curve(args) -> int:
    dist = _load_dist(args)
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "p_validate", "p_accept_unvalidated", "p_error"])
        for m, b in enumerate(error_curve(dist, args.pf, args.m_max)):
            writer.writerow([m, repr(b.p_validate), repr(b.p_accept_unvalidated), repr(b.p_error)])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _cmd_moa(args) -> int:
    dist = _load_dist(args)
    solution = solve_mop(MopProblem(dist=dist, p_f=args.pf, eps_max=args.eps_max, m_max=args.m_max))
    if solution.feasible:
        print(f"m*={solution.m_star}")
        print(f"p_error={solution.p_error!r}")
    else:
        print("infeasible")
        print(f"p_error_at_m_max={solution.p_error!r}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    grid = SectorGrid(
        rows=args.rows, cols=args.cols,
        bounds=BoundingBox(args.lat_min, args.lat_max, args.lon_min, args.lon_max),
    )
    trace_set = traces.ingest(args.traces, grid)
    n_points = sum(len(p) for p in trace_set.points.values())
    print(f"agents={len(trace_set.points)}")
    print(f"points={n_points}")
    print(f"dropped_out_of_bounds={trace_set.dropped_out_of_bounds}")
    print(f"dropped_duplicate_timestamps={trace_set.dropped_duplicates}")
    print(f"time_range={trace_set.t_min}..{trace_set.t_max}")
    if args.dist_out:
        dist = mobility.empirical_distribution(trace_set.all_points(), grid)
        with open(args.dist_out, "w", newline="") as fh:
            mobility.write_distribution_csv(dist, fh)
    return EXIT_OK


def _resolve_out_dir(args) -> str:
    out = args.out or os.environ.get(OUT_DIR_ENV)
    if not out:
        raise ConfigError(f"no output directory: pass --out or set {OUT_DIR_ENV}")
    return out


def _run_replications(experiment: cfgmod.Experiment, out_dir: str) -> list[dict]:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.txt"), "w") as fh:
        cfgmod.write_config(experiment.effective, fh)

    seeds = np.random.SeedSequence(experiment.sim.seed).generate_state(experiment.replications, dtype=np.uint64)
    records = []
    for r in range(experiment.replications):
        rep_config = sim.with_seed(experiment.sim, int(seeds[r]))
        result = sim.run(rep_config)
        steps_path = os.path.join(out_dir, f"steps_r{r:03d}.csv")
        with open(steps_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(sim.STEP_CSV_COLUMNS)
            for step in result.steps:
                writer.writerow(step.csv_row())
        with open(os.path.join(out_dir, f"ledger_r{r:03d}.csv"), "w", newline="") as fh:
            result.ledger().to_csv(fh)
        record = {"type": "replication", "replication": r, **result.summary,
                  "config": {k: v for k, v in experiment.effective.items()}}
        records.append(record)

    aggregate = _aggregate(records)
    with open(os.path.join(out_dir, "summary.jsonl"), "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        fh.write(json.dumps(aggregate, sort_keys=True) + "\n")
    records.append(aggregate)
    return records


_AGGREGATE_FIELDS = [
    "error_rate_nonvalidated",
    "error_rate_overall",
    "validated_fraction",
    "p_accept_unvalidated_mean",
    "p_f_estimate_final",
    "mean_trust",
]


def _aggregate(records: list[dict]) -> dict:
    out: dict = {"type": "aggregate", "replications": len(records)}
    for name in _AGGREGATE_FIELDS:
        values = [r[name] for r in records if r.get(name) is not None]
        if not values:
            out[f"{name}_mean"] = None
            out[f"{name}_ci95"] = None
            continue
        mean = float(np.mean(values))
        if len(values) > 1:
            half = 1.96 * float(np.std(values, ddof=1)) / math.sqrt(len(values))
        else:
            half = 0.0
        out[f"{name}_mean"] = mean
        out[f"{name}_ci95"] = half
    return out


def _load_experiment(args) -> cfgmod.Experiment:
    overrides = cfgmod.load_config_file(args.config) if args.config else {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        overrides["replications"] = args.replications
    return cfgmod.build_experiment(overrides)


def _cmd_simulate(args) -> int:
    experiment = _load_experiment(args)
    out_dir = _resolve_out_dir(args)
    records = _run_replications(experiment, out_dir)
    print(json.dumps(records[-1], sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.param not in cfgmod.SCHEMA:
        raise ConfigError(f"unknown config key {args.param!r}")
    base = cfgmod.load_config_file(args.config) if args.config else {}
    if args.seed is not None:
        base["seed"] = args.seed
    if args.replications is not None:
        base["replications"] = args.replications
    out_dir = _resolve_out_dir(args)
    os.makedirs(out_dir, exist_ok=True)

    rows = []
    for i, raw_value in enumerate(args.values.split(",")):
        overrides = dict(base)
        overrides[args.param] = cfgmod._parse_value(args.param, raw_value)
        experiment = cfgmod.build_experiment(overrides)
        point_dir = os.path.join(out_dir, f"point_{i:03d}")
        records = _run_replications(experiment, point_dir)
        aggregate = records[-1]
        row = {"param": args.param, "value": raw_value.strip()}
        for name in _AGGREGATE_FIELDS:
            row[f"{name}_mean"] = aggregate[f"{name}_mean"]
            row[f"{name}_ci95"] = aggregate[f"{name}_ci95"]
        rows.append(row)

    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["param", "value"]
        for name in _AGGREGATE_FIELDS:
            header += [f"{name}_mean", f"{name}_ci95"]
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])
    print(f"wrote {len(rows)} sweep rows to {os.path.join(out_dir, 'sweep.csv')}")
    return EXIT_OK


# --- wiring -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trustsense", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lea", parents=[], help="estimate a mobility distribution from a graymap")
    p.add_argument("--raster", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--threshold", type=int, default=mobility.DEFAULT_BLACK_THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_lea)

    p = sub.add_parser("cvp", help="validation probability for m MTPs")
    _add_dist_source(p)
    p.add_argument("--mtps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_cvp)

    p = sub.add_parser("error-curve", help="error breakdown for m = 0..m_max")
    _add_dist_source(p)
    p.add_argument("--pf", type=float, required=True)
    p.add_argument("--m-max", type=int, required=True, dest="m_max")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_error_curve)

    p = sub.add_parser("moa", help="minimal MTP count for an error budget")
    _add_dist_source(p)
    p.add_argument("--pf", type=float, required=True)
    p.add_argument("--eps-max", type=float, required=True, dest="eps_max")
    p.add_argument("--m-max", type=int, required=True, dest="m_max")
    p.set_defaults(fn=_cmd_moa)

    p = sub.add_parser("ingest", help="check a normalized trace CSV against a grid")
    p.add_argument("--traces", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--lat-min", type=float, default=0.0)
    p.add_argument("--lat-max", type=float, default=1.0)
    p.add_argument("--lon-min", type=float, default=0.0)
    p.add_argument("--lon-max", type=float, default=1.0)
    p.add_argument("--dist-out")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("simulate", help="run a configured experiment")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="vary one config key across a list of values")
    p.add_argument("--config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.set_defaults(fn=_cmd_sweep)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
