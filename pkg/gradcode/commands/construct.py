import argparse

from gradcode.coding import computation_load, dump_triplets
from gradcode.commands.common import SCHEMES, add_seed_flags, emit, run_config
from gradcode.error_handling import EXIT_OK, UsageError
from gradcode.schemas import RngSpec, SchemeTag
from gradcode.services.schemes import SchemeSpec


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("construct", help="build a coding matrix and write it as triplets")
    parser.add_argument("--scheme", choices=SCHEMES, required=True)
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--d", type=int, help="replication (frc) or expected load (bernoulli)")
    parser.add_argument("--delta", type=float, help="straggler fraction (brc)")
    parser.add_argument("--s", type=int, help="straggler count, sets delta = s/n (brc)")
    parser.add_argument("--eps", type=float, help="tolerated error fraction (brc)")
    parser.add_argument("--out", help="triplet file (stdout when omitted)")
    add_seed_flags(parser, required=False)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    scheme = SchemeTag(args.scheme)
    config = run_config(args, scheme=scheme)
    delta = args.delta
    if delta is None and args.s is not None:
        delta = args.s / args.n
    if scheme is SchemeTag.BRC and (delta is None or args.eps is None):
        raise UsageError("brc needs --delta (or --s) and --eps")
    if scheme in (SchemeTag.FRC, SchemeTag.BERNOULLI) and args.d is None:
        raise UsageError(f"{scheme.value} needs --d")

    spec = SchemeSpec(scheme=scheme, n=args.n, d=args.d, delta=delta, epsilon=args.eps)
    matrix = spec.build(RngSpec(seed=config.seed or 0, stream_id=args.stream))
    nnz = sum(len(row) for row in matrix.rows)
    emit(
        dump_triplets(matrix),
        config.out,
        f"constructed {scheme.value} n={args.n} nnz={nnz} load={computation_load(matrix)}",
    )
    return EXIT_OK
