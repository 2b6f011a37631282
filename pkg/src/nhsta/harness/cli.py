"""Command-line entry point.

Exit codes: 0 on success, 1 on a validation error, 2 on a numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError, NumericError
from .config import load_json, parse_config, parse_scan
from .presets import PRESETS, run_preset
from .runner import run_config, run_scan, with_dt

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors, so they exit with 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None, help="worker processes for scans (default: logical CPUs)")
    common.add_argument("--dt", type=_positive_float, default=None, help="fixed step override in seconds")

    parser = _Parser(prog="nhsta", description="Counterdiabatic driving of decaying two- and three-level systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common], help="propagate one JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, default=None, help="trajectory CSV path (overrides outputs.trajectory)")

    preset = sub.add_parser("preset", parents=[common], help="reproduce one figure")
    preset.add_argument("id", help=f"one of {', '.join(PRESETS)}")
    preset.add_argument("--out", type=Path, required=True, help="output directory")

    scan = sub.add_parser("scan", parents=[common], help="2-D fidelity scan from a JSON config")
    scan.add_argument("--config", required=True, type=Path)
    scan.add_argument("--out", type=Path, default=None, help="scan CSV path (overrides outputs.scan)")
    return parser


def _scan_summary(name, res) -> dict:
    return {
        "preset": name,
        "fidelity": None,
        "finalPopulations": None,
        "minNorm": None,
        "maxCdDiscrepancy": None,
        "minFidelity": res.finite_min() if len(res.failures) < res.fidelity.size else None,
        "failedCells": len(res.failures),
    }


def execute(args: argparse.Namespace) -> dict:
    if args.command == "run":
        cfg = with_dt(parse_config(load_json(args.config)), args.dt)
        _, summary = run_config(cfg, args.out or cfg.outputs.get("trajectory") or "trajectory.csv", preset=cfg.name)
        return summary
    if args.command == "scan":
        spec = parse_scan(load_json(args.config))
        if args.dt is not None:
            spec = replace(spec, base=with_dt(spec.base, args.dt))
        res = run_scan(spec, threads=args.threads, csv_path=args.out or spec.outputs.get("scan") or "scan.csv")
        return _scan_summary(spec.name, res)
    return run_preset(args.id, args.out, threads=args.threads, dt=args.dt)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            summary = execute(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
