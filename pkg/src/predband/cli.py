"""Command-line entry point: ``predband {simulate,run,verify-lemmas,report}``."""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, parse_config, serialize_config
from .evaluation import format_report_csv, read_report_csv, render_svg_band, run_experiment
from .synthetic import generate, parse_setup
from .theory_oracle import verify_lemmas

__all__ = ["main", "ExperimentConfig", "parse_config", "serialize_config"]

EXIT_OK, EXIT_METHOD_ERROR, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="predband", description="Prediction bands by width-minimising aggregation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="draw a synthetic dataset to CSV")
    sim.add_argument("--setup", required=True, help="setup1..3, mv1..3 (or 1..3)")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", help="output CSV (default: stdout)")

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--out", help="report CSV (default: config 'out', else stdout)")
    run.add_argument("--svg", help="SVG plot of the first successful method")
    run.add_argument("--timing", action="store_true", help="write wall times in the ms column")

    sub.add_parser("verify-lemmas", help="check the finite-support population lemmas")

    rep = sub.add_parser("report", help="summarise report CSVs by method")
    rep.add_argument("csv", nargs="+")
    return p


def _simulate(args) -> int:
    try:
        spec = parse_setup(args.setup)
    except ValueError as exc:
        print(f"predband simulate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.n < 1 or args.seed < 0:
        print("predband simulate: --n must be >= 1 and --seed >= 0", file=sys.stderr)
        return EXIT_USAGE
    ds = generate(spec, args.n, args.seed)
    ds.to_csv(args.out or sys.stdout)
    return EXIT_OK


def _run(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"predband run: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"predband run: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_experiment(cfg)
    except (OSError, ValueError) as exc:
        print(f"predband run: {exc}", file=sys.stderr)
        return EXIT_METHOD_ERROR
    text = format_report_csv(report, timing=args.timing)
    out = args.out or cfg.out
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    svg = args.svg or cfg.svg
    if svg and report.rows:
        method = report.rows[0].method
        spec = cfg.setup_spec()
        beta = spec.beta if spec is not None and spec.multivariate else None
        if report.test.d > 1 and beta is None:
            beta = np.ones(report.test.d) / np.sqrt(report.test.d)
        render_svg_band(report.bands[method], report.test, svg, beta=beta, title=method)
    for method, err in report.errors.items():
        print(f"predband run: method {method} failed: {err}", file=sys.stderr)
    return EXIT_METHOD_ERROR if report.errors else EXIT_OK


def _verify(_args) -> int:
    checks = verify_lemmas()
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_METHOD_ERROR


def _report(args) -> int:
    groups = defaultdict(list)
    try:
        for path in args.csv:
            for row in read_report_csv(path):
                groups[row.method].append(row)
    except (OSError, ValueError) as exc:
        print(f"predband report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print("method,runs,mean_coverage,min_coverage,mean_avg_width")
    for method in sorted(groups):
        rows = groups[method]
        cov = np.array([r.coverage for r in rows])
        wid = np.array([r.avg_width for r in rows])
        print(f"{method},{len(rows)},{cov.mean():.4f},{cov.min():.4f},{wid.mean():.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    handler = {"simulate": _simulate, "run": _run, "verify-lemmas": _verify, "report": _report}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
