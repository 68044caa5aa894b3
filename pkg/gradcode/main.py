"""
Command-line entry point: `python -m gradcode <subcommand> ...`
"""
import argparse
import sys
from typing import List, Optional

from gradcode import __version__
from gradcode.commands import COMMANDS
from gradcode.error_handling import EXIT_OK, EXIT_USAGE_ERROR, describe, handle_exception
from gradcode.logging_config import get_logger, setup_logging

logger = get_logger("main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradcode",
        description="Approximate gradient coding: codes, decoders, bounds and simulations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE_ERROR

    setup_logging()
    logger.debug("running subcommand", command=args.command)
    try:
        return args.handler(args)
    except Exception as exc:
        print(f"gradcode {args.command}: error: {describe(exc)}", file=sys.stderr)
        return handle_exception(exc)


def main() -> None:
    sys.exit(run())
