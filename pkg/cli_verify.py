"""
Command-line front end for the Richelot isogeny toolkit.

    python cli_verify.py construct --input factors.json
    python cli_verify.py map-point --input point.json
    python cli_verify.py nodes|tropes|decompose [--input curve.json] [--numeric]
    python cli_verify.py verify [--numeric] [--check NAME ...] [--seed N] [--out report.json]

Input files are JSON: {"p", "q", "r"} coefficient lists (constant term first)
or {"f": [...]} for a bare sextic; scalars are "num/den" strings. Without
--input the factorization x(x-1), (x-2)(x-3), (x-4)(x-5) is used.

Exit status: 0 on success, 1 when a check fails, 2 on an input or numeric error.
"""
import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from services.serialization import dump_json, load_json
from services.verification_service import VerificationService

logger = logging.getLogger("cli_verify")

COMMANDS = ("construct", "map-point", "nodes", "tropes", "decompose", "verify")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Richelot isogeny of Kummer surfaces: construction and verification")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", help="JSON file with the curve, factorization or point")
    parser.add_argument("--numeric", action="store_true",
                        help="include the transcendental layer (periods, theta functions, S-basis)")
    parser.add_argument("--precision", type=int, help="working precision in bits")
    parser.add_argument("--tol", type=float, help="numeric acceptance tolerance")
    parser.add_argument("--seed", type=int, help="seed of the randomized suites")
    parser.add_argument("--trials", type=int, help="number of randomized identity trials")
    parser.add_argument("--check", action="append", dest="checks", help="run only this check (repeatable)")
    parser.add_argument("--timings", action="store_true", help="add per-check wall-clock seconds")
    parser.add_argument("--out", help="write the JSON result here instead of stdout")
    return parser


def config_from_args(args) -> dict:
    config = {}
    for key in ("precision", "tol", "seed", "trials"):
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    return config


def run_command(args, service: VerificationService) -> dict:
    data = load_json(args.input)
    if args.command == "construct":
        return service.construct(data, numeric=args.numeric)
    if args.command == "map-point":
        return service.map_point(data)
    if args.command == "nodes":
        return service.nodes(data, numeric=args.numeric)
    if args.command == "tropes":
        return service.tropes(data, numeric=args.numeric)
    if args.command == "decompose":
        return service.decompose(data)
    suite = "all" if args.numeric else "exact"
    return service.verify(data, suite=suite, checks=args.checks, include_timings=args.timings)


def main(argv=None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("RICHELOT_LOG_LEVEL", "INFO"),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    args = build_parser().parse_args(argv)
    service = VerificationService(config_from_args(args))
    try:
        result = run_command(args, service)
    except (OSError, ValueError) as e:
        result = {"success": False, "error": str(e), "error_type": type(e).__name__}

    summary = result.pop("summary", None)
    text = dump_json(result, args.out)
    if not args.out:
        print(text)
    if summary:
        print(summary, file=sys.stderr)

    if not result.get("success"):
        logger.error(f"{args.command} failed: {result.get('error_type')}: {result.get('error')}")
        return 2
    if args.command == "verify" and not result.get("passed"):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
