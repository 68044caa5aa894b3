"""
Decoders: least squares, peeling over batches and the FRC replica-selection decoder
"""
import math
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
import scipy.linalg

from gradcode.coding import lost_partitions, restrict, to_dense
from gradcode.config import settings
from gradcode.error_handling import InvalidArgumentError
from gradcode.logging_config import get_logger
from gradcode.schemas import CodingMatrix, DecodeOutcome, DecoderTag, ReceivedSet, SchemeTag

logger = get_logger("decoding")


def _rank(matrix: np.ndarray, tolerance: float) -> int:
    if matrix.size == 0:
        return 0
    singular = np.linalg.svd(matrix, compute_uv=False)
    if singular[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular > tolerance * singular[0]))


def recovery_error_ls(received: CodingMatrix) -> Tuple[float, np.ndarray]:
    """
    min_u ||A_S^T u - 1_n||^2 and the minimum-norm minimizer, via the SVD.

    Replicated rows make A_S rank-deficient; singular values below
    rank_tolerance times the largest one are treated as zero.
    """
    if received.n_workers < 1:
        raise InvalidArgumentError("least squares needs at least one received row")
    system = to_dense(received).T
    ones = np.ones(received.n_partitions)
    u, _, _, _ = scipy.linalg.lstsq(system, ones, cond=settings.rank_tolerance, lapack_driver="gelsd")
    residual = system @ u - ones
    error = float(residual @ residual)
    if error < settings.ls_clip_tolerance:
        error = 0.0
    return error, u


def exact_decodable(received: CodingMatrix) -> bool:
    """True iff 1_n lies in the row space of A_S"""
    if lost_partitions(received):
        return False
    system = to_dense(received).T
    augmented = np.column_stack([system, np.ones(received.n_partitions)])
    tolerance = settings.rank_tolerance
    return _rank(system, tolerance) == _rank(augmented, tolerance)


def _ranges(matrix: CodingMatrix, rows: Tuple[int, ...]) -> Dict[int, List[Tuple[int, int]]]:
    """start -> [(end, row)] for the contiguous supports of the given rows"""
    by_start: Dict[int, List[Tuple[int, int]]] = {}
    for i in rows:
        support = matrix.support(i)
        if not support:
            continue
        start, end = support[0], support[-1] + 1
        if end - start != len(support):
            raise InvalidArgumentError(f"row {i} is not a contiguous frc range")
        by_start.setdefault(start, []).append((end, i))
    return by_start


def decode_frc(matrix: CodingMatrix, received: ReceivedSet, epsilon: float = 0.0) -> DecodeOutcome:
    """
    Sum the partial results of surviving workers holding disjoint ranges that cover
    every partition, taking the lowest-indexed survivor on ties. When no exact cover
    survives, the disjoint selection covering the most partitions is returned.
    """
    if matrix.scheme_tag is not SchemeTag.FRC:
        raise InvalidArgumentError(
            f"frc decoder needs an frc matrix, got {matrix.scheme_tag.value}",
            details={"scheme": matrix.scheme_tag.value},
        )
    if received.n_workers != matrix.n_workers:
        raise InvalidArgumentError("received set does not match the matrix")

    n = matrix.n_partitions
    by_start = _ranges(matrix, received.indices)

    # best[p]: most partitions of [p, n) coverable by disjoint surviving ranges
    best = [0] * (n + 1)
    pick: List[Optional[Tuple[int, int]]] = [None] * (n + 1)
    for p in range(n - 1, -1, -1):
        best[p] = best[p + 1]
        for end, row in by_start.get(p, ()):
            value = (end - p) + best[end]
            if value > best[p] or (value == best[p] and pick[p] is None):
                best[p] = value
                pick[p] = (end, row)

    selected: Set[int] = set()
    recovered: List[int] = []
    p = 0
    while p < n:
        choice = pick[p]
        if choice is None:
            p += 1
            continue
        end, row = choice
        selected.add(row)
        recovered.extend(range(p, end))
        p = end

    residual = float(n - best[0])
    return DecodeOutcome(
        decoder=DecoderTag.FRC,
        recovered_partitions=tuple(recovered),
        coefficients=tuple(1.0 if i in selected else 0.0 for i in received.indices),
        worker_ids=received.indices,
        residual_error=residual,
        success=residual <= epsilon * n,
    )


def peel_decode(
    received: CodingMatrix,
    target_fraction: float = 1.0,
    generator: Optional[np.random.Generator] = None,
) -> DecodeOutcome:
    """
    Peeling in batch space. A ripple is a received row with exactly one unresolved
    batch; the lowest-indexed ripple is resolved first (a random one when a generator
    is given) and its batch is cleared from every other row. Stops once
    target_fraction * n partitions are recovered or no ripple is left.
    """
    n = received.n_partitions
    members = received.batch_members()
    batch_map = received.batch_map

    unresolved: List[Set[int]] = []
    containing: Dict[int, List[int]] = {}
    for k, row in enumerate(received.rows):
        batches = {col if batch_map is None else batch_map[col] for col, _ in row}
        unresolved.append(batches)
        for batch in batches:
            containing.setdefault(batch, []).append(k)
    removed: List[List[int]] = [[] for _ in received.rows]

    ripples = {k for k, batches in enumerate(unresolved) if len(batches) == 1}
    target = math.ceil(target_fraction * n - 1e-9)
    recovered_count = 0
    order: List[int] = []
    # batch -> (ripple row, batches already subtracted from that row)
    derivation: Dict[int, Tuple[int, Tuple[int, ...]]] = {}

    while ripples and recovered_count < target:
        if generator is None:
            k = min(ripples)
        else:
            candidates = sorted(ripples)
            k = candidates[int(generator.integers(len(candidates)))]
        ripples.discard(k)
        (batch,) = unresolved[k]

        derivation[batch] = (k, tuple(removed[k]))
        order.append(batch)
        recovered_count += len(members[batch])

        for r in containing[batch]:
            if batch not in unresolved[r]:
                continue
            unresolved[r].discard(batch)
            if r != k:
                removed[r].append(batch)
            remaining = len(unresolved[r])
            if remaining == 1:
                ripples.add(r)
            elif remaining == 0:
                ripples.discard(r)

    # Unfold the sum of recovered batches into a combination of received rows.
    # Batch b equals row k_b minus the batches subtracted from k_b, all of which
    # were recovered earlier, so a reverse sweep settles every weight.
    weights = {batch: 1 for batch in order}
    coefficients = [0] * received.n_workers
    for batch in reversed(order):
        k, subtracted = derivation[batch]
        w = weights[batch]
        coefficients[k] += w
        for earlier in subtracted:
            weights[earlier] -= w

    recovered = sorted(col for batch in order for col in members[batch])
    residual = float(n - recovered_count)
    worker_ids = tuple(received.original_worker(i) for i in range(received.n_workers))
    return DecodeOutcome(
        decoder=DecoderTag.PEEL,
        recovered_partitions=tuple(recovered),
        coefficients=tuple(float(c) for c in coefficients),
        worker_ids=worker_ids,
        residual_error=residual,
        success=residual <= (1.0 - target_fraction) * n + 1e-9,
        peel_order=tuple(order),
    )


def decode_ls(received: CodingMatrix, epsilon: float = 0.0) -> DecodeOutcome:
    error, u = recovery_error_ls(received)
    reached = to_dense(received).T @ u
    recovered = tuple(int(j) for j in np.flatnonzero(np.abs(reached - 1.0) < 1e-6))
    return DecodeOutcome(
        decoder=DecoderTag.LS,
        recovered_partitions=recovered,
        coefficients=tuple(float(c) for c in u),
        worker_ids=tuple(received.original_worker(i) for i in range(received.n_workers)),
        residual_error=error,
        success=error <= epsilon * received.n_partitions + settings.ls_clip_tolerance,
    )


def decode(
    matrix: CodingMatrix,
    received: ReceivedSet,
    decoder: DecoderTag,
    epsilon: float = 0.0,
) -> DecodeOutcome:
    """Run one decoder on (A, S); success means residual <= epsilon * n"""
    if decoder is DecoderTag.FRC:
        return decode_frc(matrix, received, epsilon)
    restricted = restrict(matrix, received)
    if decoder is DecoderTag.PEEL:
        return peel_decode(restricted, 1.0 - epsilon)
    return decode_ls(restricted, epsilon)


def check_pairing(scheme: SchemeTag, decoder: DecoderTag) -> None:
    if decoder is DecoderTag.FRC and scheme is not SchemeTag.FRC:
        raise InvalidArgumentError(
            f"the frc decoder cannot decode {scheme.value} codes",
            details={"scheme": scheme.value, "decoder": decoder.value},
        )
