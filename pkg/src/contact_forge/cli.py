"""Command-line front end: ``run``, ``table`` and ``constants``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional, Sequence

from . import flows
from .config import SUITES, ScenarioConfig, load_config
from .errors import ConfigError
from .suites import exit_code, resolve_seed, run_suites

SCHEMA_VERSION = 1
SEED_ENV = "CONTACT_FORGE_SEED"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def reports_json(reports, wall_time: bool = True) -> str:
    doc = {"schema": SCHEMA_VERSION, "reports": [r.to_dict(wall_time) for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)


def _summary_line(r) -> str:
    text = f"{r.status:5s} {r.check:32s} residual={r.max_residual:.3e} samples={r.samples}"
    return f"{text}  {r.message}" if r.message else text


def cmd_run(args) -> int:
    try:
        config = load_config(args.config) if args.config else ScenarioConfig()
        seed = resolve_seed(args.seed, os.environ.get(SEED_ENV), config.seed)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValueError:
        print(f"config error: {SEED_ENV} must be an integer", file=sys.stderr)
        return 2
    parallel = args.parallel or bool(config.get("run", "parallel", False))
    reports = run_suites(config, seed, args.suite or None, parallel)
    for r in reports:
        print(_summary_line(r))
    if args.json:
        text = reports_json(reports)
        if args.json == "-":
            print(text)
        else:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
    code = exit_code(reports)
    print(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed; exit {code}", file=sys.stderr)
    return code


def table_rows(kind: str, points: int, radii: Optional[Sequence[float]] = None, t_end: float = 50.0):
    """Header and rows for one of the CSV tables."""
    if kind == "g_scan":
        prof = flows.g_profile(points)
        return ["r", "g"], list(zip(prof.r, prof.g))
    if kind == "G_scan":
        scan = flows.sup_G_scan(max(points, 100))
        return ["r", "maxG", "t_at_max"], list(zip(scan.radii, scan.row_max, scan.row_t))
    if kind == "flow_portrait":
        radii = list(radii or (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.2))
        times, table = flows.flow_portrait(radii, t_end, max(points, 2))
        header = ["t"] + [f"r0={_fmt(r)}" for r in radii]
        return header, [[t, *row] for t, row in zip(times, table)]
    raise ValueError(f"unknown table kind {kind!r}")


def write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])


def cmd_table(args) -> int:
    radii = [float(x) for x in args.radii.split(",")] if args.radii else None
    header, rows = table_rows(args.kind, args.points, radii, args.t_end)
    if args.out in (None, "-"):
        write_csv(sys.stdout, header, rows)
        return 0
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(fh, header, rows)
    except OSError as err:
        print(f"cannot write {args.out}: {err.strerror}", file=sys.stderr)
        return 2
    return 0


def cmd_constants(args) -> int:
    c = flows.constants()
    print(json.dumps({"r_M": c.r_M, "sharp_bound": c.sharp_bound, "ln_7_6": c.ln76, "g_max": c.g_max,
                      "g_argmax": c.g_argmax}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contact-forge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run verification suites")
    run.add_argument("--config", metavar="PATH")
    run.add_argument("--suite", nargs="+", choices=SUITES, metavar="NAME",
                     help=f"suites to run (default: all). One of: {', '.join(SUITES)}")
    run.add_argument("--seed", type=int)
    run.add_argument("--parallel", action="store_true")
    run.add_argument("--json", metavar="PATH", help="write the JSON report here ('-' for stdout)")
    run.set_defaults(func=cmd_run)

    table = sub.add_parser("table", help="emit a CSV table")
    table.add_argument("--kind", required=True, choices=("g_scan", "G_scan", "flow_portrait"))
    table.add_argument("--points", type=int, default=1000)
    table.add_argument("--out", metavar="PATH")
    table.add_argument("--radii", help="comma-separated initial radii for flow_portrait")
    table.add_argument("--t-end", type=float, default=50.0, dest="t_end")
    table.set_defaults(func=cmd_table)

    const = sub.add_parser("constants", help="print the numerical constants as JSON")
    const.set_defaults(func=cmd_constants)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "table":
        if args.points < 2:
            print("--points must be at least 2", file=sys.stderr)
            return 2
        if not (args.t_end > 0 and math.isfinite(args.t_end)):
            print("--t-end must be positive", file=sys.stderr)
            return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
