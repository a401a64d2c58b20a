"""
mldlab command-line front end

Usage:
    python main.py mld --r 13 --weights 3,4,5
    python main.py enumerate --level 4 --eps 1/13 --bar --r-min 1 --r-max 51
    python main.py solve data/systems/a2.json
    python main.py verify a6 d213 --jobs 8
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from controller import EXIT_USAGE, MldLabController


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _default_jobs() -> int:
    raw = os.getenv("MLDLAB_JOBS", "1")
    try:
        return _positive_int(raw)
    except argparse.ArgumentTypeError:
        raise SystemExit(f"MLDLAB_JOBS must be a positive integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=_positive_int, default=None,
                        help="worker processes (default: MLDLAB_JOBS or 1)")
    common.add_argument("--output", type=Path, default=None, help="write the result here instead of stdout")
    common.add_argument("--format", dest="fmt", choices=("json", "text"), default=None,
                        help="output format (mld defaults to text, the rest to json)")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    common.add_argument("--quiet", action="store_true", help="warnings only, no progress bars")

    parser = argparse.ArgumentParser(
        prog="mldlab",
        description="Exact minimal log discrepancies of cyclic quotient singularities and theorem re-verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mld = sub.add_parser("mld", parents=[common], help="mld of 1/r(a_1,...,a_d)")
    p_mld.add_argument("--r", type=_positive_int, required=True)
    p_mld.add_argument("--weights", required=True, help="comma-separated weights, e.g. 3,4,5")

    p_enum = sub.add_parser("enumerate", parents=[common], help="members of A(level[, eps])")
    p_enum.add_argument("--level", type=int, required=True, choices=range(1, 6))
    p_enum.add_argument("--eps", default=None, help="gap as p/q; members have mld > 2 - eps")
    p_enum.add_argument("--r-min", type=_positive_int, default=1)
    p_enum.add_argument("--r-max", type=_positive_int, required=True)
    p_enum.add_argument("--bar", action="store_true", help="only singularities with mld = sum(a_i)/r")

    p_solve = sub.add_parser("solve", parents=[common], help="solve a floor-sum system file")
    p_solve.add_argument("spec_path", help="FloorSystem JSON file")

    p_verify = sub.add_parser("verify", parents=[common], help="re-run theorem verifications")
    p_verify.add_argument("ids", nargs="+", help="report ids or 'all'")
    p_verify.add_argument("--r-max-3d", type=_positive_int, default=200)
    p_verify.add_argument("--r-max-5d", type=_positive_int, default=60)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level_name = os.getenv("MLDLAB_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    logger = logging.getLogger("mldlab")

    jobs = args.jobs if args.jobs is not None else _default_jobs()
    progress = not args.quiet and sys.stderr.isatty()
    controller = MldLabController(jobs=jobs, progress=progress)

    if args.command == "mld":
        params = {"r": args.r, "weights": args.weights}
    elif args.command == "enumerate":
        params = {"level": args.level, "eps": args.eps, "r_min": args.r_min, "r_max": args.r_max, "bar": args.bar}
    elif args.command == "solve":
        params = {"spec_path": args.spec_path}
    else:
        params = {"ids": args.ids, "r_max_3d": args.r_max_3d, "r_max_5d": args.r_max_5d}

    response = controller.route_command(args.command, fmt=args.fmt, **params)
    if "error" in response:
        print(f"error: {response['error']}", file=sys.stderr)
        return response["exit_code"]

    payload = response["output"] + "\n"
    if args.output is not None:
        try:
            args.output.parent.mkdir(parents=True, exist_ok=True)
            args.output.write_text(payload, encoding="utf-8")
        except OSError as e:
            logger.error(f"Cannot write {args.output}: {str(e)}")
            return EXIT_USAGE
        logger.info(f"Wrote {args.output}")
    else:
        sys.stdout.write(payload)
    return response["exit_code"]


if __name__ == "__main__":
    raise SystemExit(main())
