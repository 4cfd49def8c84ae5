"""
Command-line entry point.

    python -m app analyze fixtures/bn51.json
    python -m app birat-check fixtures/bn51.json --samples 100 --seed 7

JSON goes to stdout (or the summary with --format summary), a short summary
always goes to stderr. A command that fails before producing its report
prints an ErrorReport on stdout instead.
Exit codes: 0 success, 1 structured domain failure, 2 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import BaseModel

from app.analysis import (
    coarsen_report,
    compute_analysis,
    dual_report,
    fano_report,
    load_mirror_input,
    mirror_pair_from_input,
    mirrors_report,
    parse_classes,
    roundtrip_report,
    summarize,
    validation_report,
    witness_report,
)
from app.character_table import build_xi
from app.config import DEFAULT_SAMPLES, DEFAULT_SEED, LOG_LEVEL, RESIDUAL_TOL
from app.exceptions import InputError, NefToolkitError
from app.schemas import AnalysisReport, ErrorReport, ValidationReport
from app.w_graph import build_w, restriction_from_flag

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2

COMMANDS = ("validate", "dual", "mirrors", "analyze", "witness", "birat-check", "coarsen", "fano")


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so that main() owns the exit code."""

    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="python -m app", description="Nef-partition multiple-mirror toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("input", help="input JSON file")
        cmd.add_argument("--format", choices=("json", "summary"), default="json")
        if name in ("analyze", "birat-check", "fano"):
            cmd.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
            cmd.add_argument("--tol", type=float, default=RESIDUAL_TOL)
            cmd.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if name in ("analyze", "witness", "birat-check"):
            cmd.add_argument("--blocks", default=None, help="1-based block list, e.g. 1,3")
        if name == "fano":
            cmd.add_argument("--blocks", required=True, help="1-based block list, e.g. 1")
        if name == "coarsen":
            cmd.add_argument("--classes", required=True, help="1-based classes, e.g. '1,2;3'")
    return parser


def _dispatch(args) -> BaseModel:
    inp = load_mirror_input(args.input)

    if args.command == "validate":
        return validation_report(inp)
    if args.command == "dual":
        return dual_report(inp)
    if args.command == "mirrors":
        return mirrors_report(inp)
    if args.command == "analyze":
        return compute_analysis(inp, samples=args.samples, tol=args.tol, seed=args.seed, blocks=args.blocks)

    mp = mirror_pair_from_input(inp)
    if args.command == "coarsen":
        return coarsen_report(mp, parse_classes(args.classes, mp.r))
    if args.command == "fano":
        return fano_report(mp, args.blocks, samples=args.samples, tol=args.tol, seed=args.seed)

    w = restriction_from_flag(build_w(build_xi(mp)), args.blocks)
    if args.command == "witness":
        return witness_report(w)
    return roundtrip_report(w, samples=args.samples, tol=args.tol, seed=args.seed)


def _exit_code(report: BaseModel) -> int:
    if isinstance(report, AnalysisReport):
        failed = any(
            getattr(report, name).status == "failed"
            for name in AnalysisReport.model_fields if name != "input"
        )
        return EXIT_DOMAIN if failed else EXIT_OK
    if isinstance(report, ValidationReport):
        return EXIT_OK if report.valid else EXIT_DOMAIN
    passed = getattr(report, "passed", True)
    return EXIT_OK if passed else EXIT_DOMAIN


def _emit_error(exc: Exception, field: Optional[str] = None) -> None:
    report = ErrorReport(error=type(exc).__name__, message=str(exc), field=field)
    print(report.model_dump_json(indent=2))


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    try:
        args = build_parser().parse_args(argv)
        report = _dispatch(args)
    except InputError as exc:
        _emit_error(exc, exc.field)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NefToolkitError as exc:
        _emit_error(exc)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    summary = summarize(report)
    if args.format == "summary":
        print(summary)
    else:
        print(report.model_dump_json(indent=2))
    print(summary, file=sys.stderr)
    return _exit_code(report)
