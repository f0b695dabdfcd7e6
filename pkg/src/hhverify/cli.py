"""Command line front end.

    hhverify verify  <config> [--tol T] [--samples N] [--seed S] [--format json|csv] [--out PATH]
    hhverify certify <config> ...
    hhverify sweep   <config> ...      (config carries a "sweep" block)
    hhverify report  <in.json> --format csv [--out PATH]

``<config>`` may be the word ``default`` for the bundled 27-case suite.
Exit status: 0 when nothing failed, 1 when a check failed, 2 on config or IO errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .harness import (
    DEFAULT_SAMPLES,
    DEFAULT_SUITE,
    ConfigError,
    emit_report,
    expand_sweep,
    load_report,
    parse_cases,
    parse_sweep,
    read_config,
    run_certify,
    run_suite,
)
from .quadrature import DEFAULT_TOL

log = logging.getLogger("hhverify")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hhverify", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("config", help="JSON case suite, or 'default'")
    run_opts.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL, help="absolute quadrature tolerance")
    run_opts.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES, help="random triples per certificate")
    run_opts.add_argument("--seed", type=int, default=None, help="override every case seed")

    sub.add_parser("verify", parents=[run_opts, common], help="run every check of every case")
    sub.add_parser("certify", parents=[run_opts, common], help="certify the convexity hypotheses only")
    sub.add_parser("sweep", parents=[run_opts, common], help="run the suite over the config's sweep grid")
    rep = sub.add_parser("report", parents=[common], help="convert a JSON report")
    rep.add_argument("input", help="report written by verify/certify/sweep with --format json")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            report = load_report(args.input)
        else:
            path = DEFAULT_SUITE if args.config == "default" else args.config
            raw = read_config(path)
            cases = parse_cases(raw, source=str(path))
            if args.command == "certify":
                report = run_certify(cases, args.samples, args.seed)
            else:
                if args.command == "sweep":
                    cases = expand_sweep(cases, parse_sweep(raw, source=str(path)))
                report = run_suite(cases, args.tol, args.samples, args.seed)
        emit_report(report, args.format, args.out)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot write report: %s", exc)
        return EXIT_CONFIG

    s = report.summary
    log.info("%d records: %d passed, %d failed, %d skipped", s.total, s.passed, s.failed, s.precondition_skips)
    return EXIT_FAILED if s.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
