import argparse
from pathlib import Path

from gradcode.coding import load_triplets, received_from_stragglers
from gradcode.commands.common import DECODERS, DEFAULT_DECODER, add_output_flags, emit, int_list, render_csv, render_json, run_config
from gradcode.error_handling import EXIT_OK, InvalidArgumentError
from gradcode.schemas import DecoderTag
from gradcode.services.decoding import check_pairing, decode


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("decode", help="decode a triplet matrix under given stragglers")
    parser.add_argument("--matrix", required=True, help="triplet file written by construct")
    parser.add_argument("--stragglers", type=int_list, default=[], help="1-based worker ids, comma separated")
    parser.add_argument("--decoder", choices=DECODERS)
    parser.add_argument("--eps", type=float, default=0.0)
    add_output_flags(parser, formats=("json", "csv"))
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = run_config(args)
    try:
        matrix = load_triplets(Path(args.matrix).read_text(encoding="utf-8"))
    except OSError as e:
        raise InvalidArgumentError(f"cannot read matrix file: {e}")

    decoder = DecoderTag(args.decoder) if args.decoder else DEFAULT_DECODER[matrix.scheme_tag]
    check_pairing(matrix.scheme_tag, decoder)
    received = received_from_stragglers(matrix.n_workers, [i - 1 for i in args.stragglers])
    outcome = decode(matrix, received, decoder, args.eps)

    payload = {
        "decoder": outcome.decoder.value,
        "success": outcome.success,
        "residual_error": outcome.residual_error,
        "recovered_partitions": [j + 1 for j in outcome.recovered_partitions],
        "workers": [i + 1 for i in outcome.worker_ids],
        "coefficients": list(outcome.coefficients),
        "peel_order": [b + 1 for b in outcome.peel_order],
    }
    if config.format == "json":
        text = render_json(payload)
    else:
        rows = ({"worker": w, "coefficient": c} for w, c in zip(payload["workers"], payload["coefficients"]))
        text = render_csv(rows, ["worker", "coefficient"])

    emit(text, config.out, f"decode {decoder.value}: success={str(outcome.success).lower()} residual={outcome.residual_error:.12g}")
    return EXIT_OK
