"""
Helpers shared by the subcommands: flag parsing, CSV/JSON rendering and output
"""
import argparse
import csv
import io
import json
import sys
from typing import Any, Iterable, List, Mapping, Optional, Sequence

from pydantic import ValidationError

from gradcode.config import settings
from gradcode.error_handling import UsageError
from gradcode.schemas import DecoderTag, RunConfig, SchemeTag

SCHEMES = [tag.value for tag in SchemeTag]
DECODERS = [tag.value for tag in DecoderTag]

DEFAULT_DECODER = {
    SchemeTag.FRC: DecoderTag.FRC,
    SchemeTag.BRC: DecoderTag.PEEL,
    SchemeTag.FORGET_S: DecoderTag.LS,
    SchemeTag.BERNOULLI: DecoderTag.LS,
}


def int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def float_list(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def add_output_flags(parser: argparse.ArgumentParser, formats: Sequence[str] = ("csv", "json")) -> None:
    parser.add_argument("--out", help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=list(formats), default=formats[0])


def add_seed_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--seed", type=int, required=required, help="64-bit seed; never defaulted")
    parser.add_argument("--stream", type=int, default=0, help="stream id under the seed")


def run_config(args: argparse.Namespace, **fields: Any) -> RunConfig:
    values = {
        "subcommand": args.command,
        "out": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
        "format": getattr(args, "format", "csv"),
        **fields,
    }
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise UsageError(e.errors(include_url=False)[0]["msg"])


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.{settings.float_digits}g}"
    return str(value)


def render_csv(rows: Iterable[Mapping[str, Any]], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[column]) for column in columns])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit(text: str, out: Optional[str], summary: str) -> None:
    """Write the result, then the one-line summary (stderr when the result went to stdout)"""
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
