"""
`example1` subcommand: replays the six-worker batch raptor illustration.

Scenario one loses workers 5 and 6 and must recover every partition in the order
g1, g2, g5+g6, g3+g4. Scenario two uses the variant assignment, loses workers 4 and 6
and must stop at g1+g2+g5+g6 with residual 2.
"""
import argparse
from typing import List, NamedTuple, Tuple

from gradcode.coding import received_from_stragglers, restrict
from gradcode.commands.common import emit, render_json, run_config
from gradcode.error_handling import EXIT_DOMAIN_ERROR, EXIT_OK
from gradcode.logging_config import get_logger
from gradcode.schemas import CodingMatrix, DecodeOutcome
from gradcode.services.decoding import peel_decode
from gradcode.services.schemes import example1_matrix

logger = get_logger("example1")


class Scenario(NamedTuple):
    name: str
    variant: bool
    stragglers: Tuple[int, ...]
    recovered: Tuple[int, ...]
    residual: float
    peel_order: Tuple[int, ...]


SCENARIOS = (
    Scenario("full recovery", False, (4, 5), (0, 1, 2, 3, 4, 5), 0.0, (0, 1, 3, 2)),
    Scenario("partial recovery", True, (3, 5), (0, 1, 4, 5), 2.0, (0, 1, 3)),
)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("example1", help="replay the six-worker peeling example")
    parser.add_argument("--out", help="JSON trace file (stdout when omitted)")
    parser.set_defaults(handler=handle)


def batch_label(matrix: CodingMatrix, batch: int) -> str:
    return "+".join(f"g{col + 1}" for col in matrix.batch_members()[batch])


def replay(scenario: Scenario) -> Tuple[CodingMatrix, DecodeOutcome]:
    matrix = example1_matrix(scenario.variant)
    received = received_from_stragglers(matrix.n_workers, scenario.stragglers)
    return matrix, peel_decode(restrict(matrix, received))


def matches(scenario: Scenario, outcome: DecodeOutcome) -> bool:
    return (
        outcome.recovered_partitions == scenario.recovered
        and outcome.residual_error == scenario.residual
        and outcome.peel_order == scenario.peel_order
    )


def handle(args: argparse.Namespace) -> int:
    config = run_config(args)
    trace: List[dict] = []
    passed = 0
    for scenario in SCENARIOS:
        matrix, outcome = replay(scenario)
        ok = matches(scenario, outcome)
        passed += ok
        if not ok:
            logger.warning("golden trace mismatch", scenario=scenario.name, peel_order=outcome.peel_order)
        trace.append({
            "scenario": scenario.name,
            "stragglers": [i + 1 for i in scenario.stragglers],
            "peel_order": " -> ".join(batch_label(matrix, b) for b in outcome.peel_order),
            "recovered_partitions": [j + 1 for j in outcome.recovered_partitions],
            "residual_error": outcome.residual_error,
            "match": ok,
        })

    emit(render_json(trace), config.out, f"example1: {passed}/{len(SCENARIOS)} scenarios match")
    return EXIT_OK if passed == len(SCENARIOS) else EXIT_DOMAIN_ERROR
