"""Command-line front end: ``ptfm solve | gen | bench``.

Exit codes follow sysexits: 0 success, 2 iteration limit or stall,
64 usage error, 66 unreadable input, 73 output not writable.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from . import bench
from .errors import LpError
from .finite_term import INDICATORS
from .lp_core import load_instance, save_instance
from .methods import METHODS, MethodConfig, run

EX_OK = 0
EX_NOT_CONVERGED = 2
EX_USAGE = 64
EX_NOINPUT = 66
EX_CANTCREAT = 73

TRACE_FIELDS = ["k", "kind", "alpha", "v0", "gap", "delta", "psi"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ptfm", description="Parabolic target-following LP solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a JSON problem file")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=METHODS, default="ptfm2")
    p.add_argument("--eps", type=_positive_float, default=1e-8)
    p.add_argument("--r", type=float, default=6.0 / 7.0)
    p.add_argument("--max-outer", type=int, default=500)
    p.add_argument("--finite-termination", action="store_true")
    p.add_argument("--activation", choices=("always", "awake_tests"), default="awake_tests")
    p.add_argument("--beta-policy", choices=("constant", "proportional"), default="constant")
    p.add_argument("--trace", help="write a per-iteration CSV trace")
    p.add_argument("--report", help="write the JSON report here (default: stdout)")

    g = sub.add_parser("gen", help="generate a random feasible instance")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--index", type=int, default=0, help="instance index within the seed")
    g.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run benchmark cells")
    b.add_argument("--grid", choices=("default", "full"), default="default")
    b.add_argument("--cells", help="explicit cells, e.g. 32x64,64x128")
    b.add_argument("--method", choices=METHODS, default="ptfm2")
    b.add_argument("--count", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--eps", type=_positive_float, default=1e-8)
    b.add_argument("--finite-termination", action="store_true")
    b.add_argument("--indicators", default="ratio_xs",
                   help="comma-separated indicators for the termination test")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True)
    return parser


def _method_config(args) -> MethodConfig:
    return MethodConfig(
        method=args.method, eps=args.eps, r=args.r, max_outer=args.max_outer,
        finite_termination=args.finite_termination, activation_policy=args.activation,
        beta_policy=args.beta_policy,
    )


def _write_trace(path, inst, report) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for rec in report.records:
            writer.writerow([rec.k, rec.kind, repr(rec.alpha), repr(rec.v0_after),
                             repr(rec.gap_after), repr(rec.delta_after), repr(rec.psi_after)])


def cmd_solve(args) -> int:
    try:
        cfg = _method_config(args)
    except ValueError as exc:
        print(f"ptfm solve: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        inst, u0 = load_instance(args.input)
    except OSError as exc:
        print(f"ptfm solve: cannot read {args.input}: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except (ValueError, LpError) as exc:
        print(f"ptfm solve: invalid problem file: {exc}", file=sys.stderr)
        return EX_NOINPUT
    if u0 is None:
        print("ptfm solve: problem file has no strictly feasible x0/s0/y0", file=sys.stderr)
        return EX_NOINPUT

    report = run(inst, u0, cfg)
    text = json.dumps(report.to_dict(), indent=1)
    try:
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(text)
        else:
            print(text)
        if args.trace:
            _write_trace(args.trace, inst, report)
    except OSError as exc:
        print(f"ptfm solve: cannot write output: {exc}", file=sys.stderr)
        return EX_CANTCREAT
    return EX_OK if report.success else EX_NOT_CONVERGED


def cmd_gen(args) -> int:
    try:
        gen = bench.GenConfig(args.m, args.n, args.seed, 1)
    except ValueError as exc:
        print(f"ptfm gen: {exc}", file=sys.stderr)
        return EX_USAGE
    inst, u0 = bench.generate(gen, args.index)
    try:
        save_instance(args.out, inst, u0)
    except OSError as exc:
        print(f"ptfm gen: cannot write {args.out}: {exc}", file=sys.stderr)
        return EX_CANTCREAT
    return EX_OK


def _parse_cells(text):
    cells = []
    for item in text.split(","):
        m, n = item.lower().split("x")
        cells.append((int(m), int(n)))
    return cells


def cmd_bench(args) -> int:
    try:
        if args.cells:
            cells = _parse_cells(args.cells)
        else:
            cells = bench.FULL_GRID if args.grid == "full" else bench.DEFAULT_GRID
        gens = [bench.GenConfig(m, n, args.seed, args.count) for m, n in cells]
        indicators = tuple(i.strip() for i in args.indicators.split(",") if i.strip())
        unknown = set(indicators) - set(INDICATORS)
        if unknown:
            raise ValueError(f"unknown indicators {sorted(unknown)}")
        cfg = MethodConfig(method=args.method, eps=args.eps,
                           finite_termination=args.finite_termination,
                           ft_indicators=indicators)
    except ValueError as exc:
        print(f"ptfm bench: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        os.makedirs(args.out, exist_ok=True)
        if not os.access(args.out, os.W_OK):
            raise PermissionError(f"{args.out} is not writable")
    except OSError as exc:
        print(f"ptfm bench: {exc}", file=sys.stderr)
        return EX_CANTCREAT

    stats = []
    for gen in gens:
        cell = bench.run_cell(gen, cfg, jobs=args.jobs)
        logging.getLogger(__name__).info(
            "cell %dx%d: mean %.2f +- %.1f%%, ft %d, failures %d",
            gen.m, gen.n, cell.mean_predictors, cell.rel_std, cell.ft_success_count, cell.failures,
        )
        stats.append(cell)
    try:
        csv_path, _ = bench.emit_report(stats, args.out)
    except OSError as exc:
        print(f"ptfm bench: {exc}", file=sys.stderr)
        return EX_CANTCREAT
    with open(csv_path) as fh:
        sys.stdout.write(fh.read())
    return EX_NOT_CONVERGED if any(c.failed for c in stats) else EX_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"solve": cmd_solve, "gen": cmd_gen, "bench": cmd_bench}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
