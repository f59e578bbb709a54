"""Command-line front end: certify, plot, selftest."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .config import MAX_SEED, load_config
from .errors import CertifierError, ConfigError
from .pipeline import run_pipeline
from .plotting import emit_lift_plot
from .report import emit_report
from .selftest import run_selftest


def _seed_arg(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {value}")
    return value


def _ids_arg(text: str) -> list[int]:
    try:
        ids = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated criterion ids, got {text!r}")
    if not ids:
        raise argparse.ArgumentTypeError("criterion id list is empty")
    return ids


def _tighten_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tighten must be a number, got {text!r}")
    if not value >= 1.0:
        raise argparse.ArgumentTypeError(f"tighten must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypcert",
        description="Certify uniform expansion or hyperbolicity of circle "
                    "and torus maps from periodic-orbit data.",
    )
    parser.add_argument("--version", action="version",
                        version=f"hypcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    certify = sub.add_parser(
        "certify", help="run the certification pipeline on a config file")
    certify.add_argument("config", help="path to a JSON run configuration")
    certify.add_argument("--seed", type=_seed_arg, default=None,
                         help="override the config seed")
    certify.add_argument("--report-dir", default=None,
                         help="override the config report directory")

    plot = sub.add_parser(
        "plot", help="draw the lift of a configured circle map")
    plot.add_argument("config", help="path to a JSON run configuration")
    plot.add_argument("--out", required=True,
                      help="output path, .svg or .pdf")

    selftest = sub.add_parser(
        "selftest", help="run the release acceptance criteria")
    selftest.add_argument("--only", type=_ids_arg, default=None,
                          help="comma-separated criterion ids, e.g. 1,5,9")
    selftest.add_argument("--seed", type=_seed_arg, default=0,
                          help="seed for the randomized criteria")
    selftest.add_argument("--tighten", type=_tighten_arg, default=1.0,
                          help="divide numeric tolerances by this factor")
    return parser


def _cmd_certify(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.report_dir is not None:
        config = dataclasses.replace(config, report_dir=args.report_dir)
    report = run_pipeline(config)
    json_path = emit_report(report, "json", config.report_dir, config.basename)
    csv_path = emit_report(report, "csv-summary", config.report_dir,
                           config.basename)
    print(report.verdict_line())
    print(f"report:  {json_path}")
    print(f"summary: {csv_path}")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    path = emit_lift_plot(config.model(), Path(args.out))
    print(f"plot: {path}")
    return 0


def _cmd_selftest(args: argparse.Namespace) -> int:
    summary = run_selftest(only=args.only, tighten=args.tighten,
                           seed=args.seed)
    return 0 if summary.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"certify": _cmd_certify, "plot": _cmd_plot,
               "selftest": _cmd_selftest}[args.command]
    try:
        return handler(args)
    except (ConfigError, CertifierError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
