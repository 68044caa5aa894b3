"""
`train` subcommand: coded gradient descent on a synthetic logistic-regression problem.

Parameters come from an optional flat key=value file (--config) and are overridden by
flags. Recognized keys: scheme, n, s, d, eps, alpha, iterations, samples, features,
seed, stream, restart.
"""
import argparse
from pathlib import Path
from typing import Any, Dict

from dotenv import dotenv_values

from gradcode.commands.common import SCHEMES, emit, render_csv, render_json, run_config
from gradcode.error_handling import EXIT_OK, UsageError
from gradcode.schemas import RngSpec, SchemeTag, TrainConfig
from gradcode.services.trainer import gen_synthetic, iterations_to_auc, train

COLUMNS = ["iteration", "loss", "auc", "residual", "retries", "fallback"]

CONFIG_KEYS: Dict[str, Any] = {
    "scheme": str,
    "n": int,
    "s": int,
    "d": int,
    "eps": float,
    "alpha": float,
    "iterations": int,
    "samples": int,
    "features": int,
    "seed": int,
    "stream": int,
    "restart": lambda v: v.strip().lower() in {"1", "true", "yes", "on"},
}

DEFAULTS: Dict[str, Any] = {
    "n": 60,
    "s": 6,
    "eps": 0.05,
    "alpha": 1e-4,
    "iterations": 100,
    "samples": 20000,
    "features": 50,
    "stream": 0,
    "restart": True,
}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="coded distributed gradient descent on synthetic data")
    parser.add_argument("--config", help="flat key=value parameter file")
    parser.add_argument("--scheme", choices=SCHEMES)
    parser.add_argument("--n", type=int, help="workers (and data partitions)")
    parser.add_argument("--s", type=int, help="stragglers per iteration")
    parser.add_argument("--d", type=int)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--alpha", type=float, help="step size")
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--samples", type=int, help="training samples N")
    parser.add_argument("--features", type=int, help="feature dimension p")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--stream", type=int)
    parser.add_argument("--no-restart", dest="restart", action="store_false", default=None)
    parser.add_argument("--target-auc", type=float, help="report the first iteration reaching this holdout AUC")
    parser.add_argument("--out", help="per-iteration CSV (stdout when omitted)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.set_defaults(handler=handle)


def read_config(path: str) -> Dict[str, Any]:
    file = Path(path)
    if not file.is_file():
        raise UsageError(f"config file not found: {path}")
    values: Dict[str, Any] = {}
    for key, raw in dotenv_values(file).items():
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}", details={"file": path})
        if raw is None or raw == "":
            continue
        try:
            values[key] = CONFIG_KEYS[key](raw)
        except ValueError:
            raise UsageError(f"bad value for {key}: {raw!r}", details={"file": path})
    return values


def merged_parameters(args: argparse.Namespace) -> Dict[str, Any]:
    params = dict(DEFAULTS)
    if args.config:
        params.update(read_config(args.config))
    params.update({key: getattr(args, key) for key in CONFIG_KEYS if getattr(args, key) is not None})
    if "scheme" not in params:
        raise UsageError("train needs --scheme (flag or config key)")
    if params["scheme"] not in SCHEMES:
        raise UsageError(f"unknown scheme {params['scheme']!r}")
    return params


def handle(args: argparse.Namespace) -> int:
    params = merged_parameters(args)
    if args.target_auc is not None and not 0.0 <= args.target_auc <= 1.0:
        raise UsageError(f"--target-auc must lie in [0, 1], got {args.target_auc}")
    scheme = SchemeTag(params["scheme"])
    args.seed = params.get("seed")
    config = run_config(args, scheme=scheme)

    rng = RngSpec(seed=config.seed, stream_id=params["stream"])
    cfg = TrainConfig(
        scheme=scheme,
        n_workers=params["n"],
        s=params["s"],
        epsilon=params["eps"],
        d=params.get("d"),
        step_size=params["alpha"],
        iterations=params["iterations"],
        restart_on_failure=params["restart"],
        rng=rng,
    )
    dataset = gen_synthetic(params["samples"], params["features"], cfg.n_workers, rng.substream(2))
    records = train(dataset, cfg)

    if config.format == "json":
        text = render_json([record.model_dump() for record in records])
    else:
        rows = (
            {
                "iteration": r.iteration,
                "loss": r.loss,
                "auc": r.auc,
                "residual": r.decode_residual,
                "retries": r.retries,
                "fallback": r.fallback,
            }
            for r in records
        )
        text = render_csv(rows, COLUMNS)

    final = records[-1]
    summary = (
        f"train {scheme.value} n={cfg.n_workers} s={cfg.s}: final loss={final.loss:.6g} "
        f"auc={final.auc:.4g} retries={sum(r.retries for r in records)}"
    )
    if args.target_auc is not None:
        reached = iterations_to_auc(records, args.target_auc)
        summary += f" auc>={args.target_auc:g} at iteration {'never' if reached is None else reached}"
    emit(text, config.out, summary)
    return EXIT_OK
