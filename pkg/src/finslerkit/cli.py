"""Command-line front end.

    finslerkit verify <suite> --metric FILE [--samples N] [--seed S] [--step H]
                      [--out PATH] [--format csv|json] [--tol key=val ...] [--figures]
    finslerkit trace --metric FILE --x X1 X2 .. --y Y1 Y2 .. --length L [--step H]
                     [--frame V1 V2 ..] --out FILE.csv
    finslerkit suites

Exit status: 0 when every check passes, 1 when any check fails, 2 for usage,
schema or inapplicable-suite errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, geodesics, suites
from .errors import FinslerError
from .metricfile import load_metric
from .report import dumps_csv, dumps_json, export_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _tol_pair(text: str):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key!r} is not a number: {val!r}") from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finslerkit", description="Finsler geometry verification suites")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite on a metric file")
    v.add_argument("suite", choices=suites.SUITES + (suites.ALL,))
    v.add_argument("--metric", required=True, help="metric definition file (finsler-metric/v1)")
    v.add_argument("--samples", type=_positive_int, default=None, help="samples per suite (default: per-suite)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--step", type=_positive_float, default=1e-3, help="geodesic step size")
    v.add_argument("--out", default=None, help="report path (default: print to stdout)")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="KEY=VAL",
                   help="override a tolerance; keys: " + ", ".join(sorted(suites.DEFAULT_TOLERANCES)))
    v.add_argument("--figures", action="store_true",
                   help="also write PNG figures and series CSV tables next to --out")
    v.add_argument("--include-runtime", action="store_true",
                   help="add wall-clock runtime to the JSON report (breaks byte-identical reruns)")
    v.add_argument("--quiet", action="store_true", help="no per-check summary on stderr")

    t = sub.add_parser("trace", help="integrate one geodesic and export it as CSV")
    t.add_argument("--metric", required=True)
    t.add_argument("--x", type=float, nargs="+", required=True, help="start point")
    t.add_argument("--y", type=float, nargs="+", required=True, help="start direction (rescaled to F = 1)")
    t.add_argument("--length", type=_positive_float, required=True)
    t.add_argument("--step", type=_positive_float, default=1e-3)
    t.add_argument("--frame", type=float, nargs="+", action="append", default=[], help="a vector to transport")
    t.add_argument("--out", required=True)

    sub.add_parser("suites", help="list suites and the equation tags they report")
    return p


def _summary(report, stream):
    for r in report.records:
        tol = "info" if r.tolerance is None else f"{r.tolerance:.1e}"
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag} {r.suite:15s} {r.tag:27s} max={r.max_residual:.3e} tol={tol} n={r.samples}", file=stream)
    for s in report.skipped:
        print(f"SKIP {s['suite']:15s} {s['reason']}", file=stream)
    print(f"{'PASS' if report.passed else 'FAIL'} overall ({len(report.records)} checks)", file=stream)


def cmd_verify(args, parser) -> int:
    if args.figures and args.out is None:
        parser.error("--figures needs --out (figures are written next to the report)")
    try:
        config = suites.ExperimentConfig(
            metric=args.metric,
            suite=args.suite,
            samples=args.samples,
            seed=args.seed,
            step=args.step,
            tolerances=dict(args.tol),
            format=args.format,
        )
        suites.resolve_tolerances(config.tolerances)
        report = suites.run_suite(config)
    except KeyError as exc:
        print(f"finslerkit: error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (FinslerError, ValueError, OSError) as exc:
        print(f"finslerkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is None:
        text = dumps_json(report, args.include_runtime) if args.format == "json" else dumps_csv(report)
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        try:
            export_table(report, out, args.format, include_runtime=args.include_runtime)
            if args.figures:
                from .plotting import render_report

                render_report(report, out.parent, out.stem)
        except OSError as exc:
            print(f"finslerkit: error: cannot write output: {exc}", file=sys.stderr)
            return EXIT_USAGE
    if not args.quiet:
        _summary(report, sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_trace(args) -> int:
    try:
        spec, _ = load_metric(args.metric)
        x = np.array(args.x)
        y = np.array(args.y)
        if x.shape != (spec.dimension,) or y.shape != (spec.dimension,):
            raise ValueError(f"--x and --y need {spec.dimension} components")
        y = y / np.sqrt(spec.F2(x, y))
        frame = np.array(args.frame) if args.frame else None
        if frame is not None and frame.shape[1:] != (spec.dimension,):
            raise ValueError(f"each --frame vector needs {spec.dimension} components")
        trace = geodesics.integrate_geodesics(spec, x, y, args.length, args.step,
                                              None if frame is None else frame[None])[0]
        geodesics.export_trace_csv(trace, args.out)
    except (FinslerError, ValueError, OSError) as exc:
        print(f"finslerkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if trace.truncated:
        print(f"finslerkit: trace truncated at t={trace.t[-1]!r} (left the chart)", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        return cmd_verify(args, parser)
    if args.command == "trace":
        return cmd_trace(args)
    for name in suites.SUITES:
        print(f"{name:15s} {' '.join(suites.paper_map[name])}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
