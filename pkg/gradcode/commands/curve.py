import argparse

from gradcode.commands.common import DEFAULT_DECODER, emit, int_list, render_csv, render_json, run_config
from gradcode.commands.failprob import COLUMNS, add_trial_flags
from gradcode.error_handling import EXIT_OK
from gradcode.schemas import DecoderTag, RngSpec, SchemeTag
from gradcode.services.montecarlo import failure_curve, trial_rows


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("curve", help="failure probability against n at a fixed straggler fraction")
    parser.add_argument("--n", type=int_list, required=True, help="comma-separated worker counts")
    parser.add_argument("--delta", type=float, required=True, help="straggler fraction s/n")
    add_trial_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    scheme = SchemeTag(args.scheme)
    decoder = DecoderTag(args.decoder) if args.decoder else DEFAULT_DECODER[scheme]
    config = run_config(args, scheme=scheme, decoder=decoder, trials=args.trials, threads=args.threads or 1)
    curve = failure_curve(
        scheme,
        decoder,
        args.n,
        args.delta,
        args.eps,
        args.trials,
        RngSpec(seed=config.seed, stream_id=args.stream),
        threads=args.threads,
        fix_code=args.fix_code,
    )
    if config.format == "json":
        text = render_json([stats.model_dump(mode="json") for stats in curve])
    else:
        text = render_csv(trial_rows(curve), COLUMNS)
    points = ", ".join(f"n={stats.n}: {stats.p_hat:.4g}" for stats in curve)
    emit(text, config.out, f"curve {scheme.value}/{decoder.value} delta={args.delta}: {points}")
    return EXIT_OK
