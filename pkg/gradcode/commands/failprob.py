import argparse
import math
from typing import Optional

from gradcode.commands.common import (
    DECODERS,
    DEFAULT_DECODER,
    SCHEMES,
    add_output_flags,
    add_seed_flags,
    emit,
    render_csv,
    render_json,
    run_config,
)
from gradcode.error_handling import EXIT_OK
from gradcode.schemas import DecoderTag, RngSpec, SchemeTag
from gradcode.services.bounds import frc_load
from gradcode.services.montecarlo import estimate_failure, trial_rows
from gradcode.services.schemes import SchemeSpec

COLUMNS = ["scheme", "decoder", "n", "s", "epsilon", "trials", "p_hat", "ci", "mean_error", "seed"]


def add_trial_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", choices=SCHEMES, required=True)
    parser.add_argument("--decoder", choices=DECODERS)
    parser.add_argument("--eps", type=float, default=0.0)
    parser.add_argument("--trials", type=int, default=10000)
    parser.add_argument("--threads", type=int, help="worker threads (default GRADCODE_THREADS)")
    parser.add_argument("--fix-code", action="store_true", help="draw a randomized code once instead of per trial")
    add_seed_flags(parser)
    add_output_flags(parser)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("failprob", help="Monte Carlo failure probability at one (n, s)")
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--s", type=int, required=True)
    parser.add_argument("--d", type=int, help="frc replication or bernoulli expected load")
    parser.add_argument("--delta", type=float, help="brc design straggler fraction (default s/n)")
    add_trial_flags(parser)
    parser.set_defaults(handler=handle)


def scheme_spec(scheme: SchemeTag, n: int, s: int, d: Optional[int], delta: Optional[float], epsilon: float) -> SchemeSpec:
    if scheme is SchemeTag.FRC:
        return SchemeSpec(scheme=scheme, n=n, d=d or frc_load(n, s))
    if scheme is SchemeTag.BERNOULLI:
        return SchemeSpec(scheme=scheme, n=n, d=d or min(n, max(1, math.ceil(math.log(n)))))
    if scheme is SchemeTag.BRC:
        return SchemeSpec(scheme=scheme, n=n, delta=delta or max(s, 1) / n, epsilon=epsilon)
    return SchemeSpec(scheme=scheme, n=n)


def handle(args: argparse.Namespace) -> int:
    scheme = SchemeTag(args.scheme)
    decoder = DecoderTag(args.decoder) if args.decoder else DEFAULT_DECODER[scheme]
    config = run_config(
        args,
        scheme=scheme,
        decoder=decoder,
        trials=args.trials,
        threads=args.threads or 1,
    )
    spec = scheme_spec(scheme, args.n, args.s, args.d, args.delta, args.eps)
    stats = estimate_failure(
        spec,
        decoder,
        args.n,
        args.s,
        args.eps,
        args.trials,
        RngSpec(seed=config.seed, stream_id=args.stream),
        threads=args.threads,
        fix_code=args.fix_code,
    )
    if config.format == "json":
        text = render_json(stats.model_dump(mode="json"))
    else:
        text = render_csv(trial_rows([stats]), COLUMNS)
    emit(
        text,
        config.out,
        f"failprob {scheme.value}/{decoder.value} n={args.n} s={args.s}: "
        f"p_hat={stats.p_hat:.6g} +- {stats.ci_halfwidth_3sigma:.3g}",
    )
    return EXIT_OK
