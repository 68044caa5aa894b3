import argparse

from gradcode.commands.common import emit, float_list, render_csv, run_config
from gradcode.error_handling import EXIT_OK, UsageError
from gradcode.services.bounds import bounds_table

COLUMNS = ["n", "s", "delta", "epsilon", "lb_exact", "lb_eps", "frc_load", "brc_expected_load", "regime_flag"]


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("bounds", help="computation-load bounds over a straggler sweep")
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--smin", type=int, default=10)
    parser.add_argument("--smax", type=int, required=True)
    parser.add_argument("--sstep", type=int, default=10)
    parser.add_argument("--eps", type=float_list, default=[0.0])
    parser.add_argument("--out", help="CSV file (stdout when omitted)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = run_config(args)
    if args.sstep < 1 or not 0 < args.smin <= args.smax < args.n:
        raise UsageError("need 0 < smin <= smax < n and sstep >= 1")

    rows = bounds_table(args.n, range(args.smin, args.smax + 1, args.sstep), args.eps)
    emit(
        render_csv((row.model_dump() for row in rows), COLUMNS),
        config.out,
        f"bounds n={args.n}: {len(rows)} rows",
    )
    return EXIT_OK
