"""
Operations over coding matrices: load, straggler sampling, restriction and the
plain-text triplet format
"""
from typing import Iterable, List, Set, Tuple, Union

import numpy as np
from pydantic import ValidationError

from gradcode.error_handling import InvalidArgumentError, MatrixFormatError
from gradcode.schemas import CodingMatrix, ReceivedSet, RngSpec, Row, SchemeTag

RandomSource = Union[RngSpec, np.random.Generator]


def as_generator(rng: RandomSource) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()


def matrix_from_supports(
    supports: Iterable[Iterable[int]],
    n_partitions: int,
    scheme_tag: SchemeTag,
    batch_map: Union[Tuple[int, ...], None] = None,
) -> CodingMatrix:
    rows = tuple(tuple((col, 1.0) for col in sorted(set(support))) for support in supports)
    return CodingMatrix(
        n_workers=len(rows),
        n_partitions=n_partitions,
        rows=rows,
        scheme_tag=scheme_tag,
        batch_map=batch_map,
    )


def computation_load(matrix: CodingMatrix) -> int:
    """Largest number of partitions any single worker stores"""
    return max((len(row) for row in matrix.rows), default=0)


def column_weights(matrix: CodingMatrix) -> np.ndarray:
    """Number of workers storing each partition"""
    weights = np.zeros(matrix.n_partitions, dtype=np.int64)
    for row in matrix.rows:
        for col, _ in row:
            weights[col] += 1
    return weights


def sample_received_set(n: int, s: int, rng: RandomSource) -> ReceivedSet:
    """Uniformly random set of n - s non-straggling workers"""
    if not 0 <= s < n:
        raise InvalidArgumentError(f"need 0 <= s < n, got s={s}, n={n}", details={"n": n, "s": s})
    if s == 0:
        return ReceivedSet(n_workers=n, indices=tuple(range(n)))
    chosen = as_generator(rng).choice(n, size=n - s, replace=False)
    return ReceivedSet(n_workers=n, indices=tuple(int(i) for i in np.sort(chosen)))


def received_from_stragglers(n: int, stragglers: Iterable[int]) -> ReceivedSet:
    lost = set(stragglers)
    if any(not 0 <= i < n for i in lost):
        raise InvalidArgumentError(f"straggler index out of range for n={n}", details={"stragglers": sorted(lost)})
    return ReceivedSet(n_workers=n, indices=tuple(i for i in range(n) if i not in lost))


def restrict(matrix: CodingMatrix, received: ReceivedSet) -> CodingMatrix:
    """Row submatrix A_S in the order of S; columns untouched"""
    if received.n_workers != matrix.n_workers:
        raise InvalidArgumentError(
            f"received set is over {received.n_workers} workers, matrix has {matrix.n_workers}"
        )
    if received.indices and received.indices[-1] >= matrix.n_workers:
        raise InvalidArgumentError("received index out of range")
    if not received.indices:
        raise InvalidArgumentError("received set is empty")

    # rows were validated when the full matrix was built
    return CodingMatrix.model_construct(
        n_workers=len(received.indices),
        n_partitions=matrix.n_partitions,
        rows=tuple(matrix.rows[i] for i in received.indices),
        scheme_tag=matrix.scheme_tag,
        batch_map=matrix.batch_map,
        worker_ids=tuple(matrix.original_worker(i) for i in received.indices),
    )


def lost_partitions(matrix: CodingMatrix) -> Set[int]:
    """Partitions whose column is all-zero"""
    covered = {col for row in matrix.rows for col, _ in row}
    return set(range(matrix.n_partitions)) - covered


def to_dense(matrix: CodingMatrix) -> np.ndarray:
    dense = np.zeros((matrix.n_workers, matrix.n_partitions), dtype=np.float64)
    for i, row in enumerate(matrix.rows):
        for col, coeff in row:
            dense[i, col] = coeff
    return dense


def encode(matrix: CodingMatrix, partial_gradients: np.ndarray) -> np.ndarray:
    """Coded partial gradients g~ = A g, one row per worker"""
    return to_dense(matrix) @ partial_gradients


def dump_triplets(matrix: CodingMatrix) -> str:
    """
    Serialize to the triplet format (1-based indices):

        n_workers n_partitions nnz scheme_tag
        row col coeff
        ...
        batch col batch_id
    """
    nnz = sum(len(row) for row in matrix.rows)
    lines = [f"{matrix.n_workers} {matrix.n_partitions} {nnz} {matrix.scheme_tag.value}"]
    for i, row in enumerate(matrix.rows):
        lines.extend(f"{i + 1} {col + 1} {coeff!r}" for col, coeff in row)
    if matrix.batch_map is not None:
        lines.extend(f"batch {col + 1} {batch + 1}" for col, batch in enumerate(matrix.batch_map))
    return "\n".join(lines) + "\n"


def load_triplets(text: str) -> CodingMatrix:
    lines = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    if not lines or len(lines[0]) != 4:
        raise MatrixFormatError("missing header 'n_workers n_partitions nnz scheme_tag'")
    try:
        n_workers, n_partitions, nnz = (int(v) for v in lines[0][:3])
        scheme_tag = SchemeTag(lines[0][3])
    except ValueError as e:
        raise MatrixFormatError(f"bad header: {e}")

    entries: List[List[Tuple[int, float]]] = [[] for _ in range(n_workers)]
    batches: dict[int, int] = {}
    try:
        for fields in lines[1:]:
            if fields[0] == "batch":
                batches[int(fields[1]) - 1] = int(fields[2]) - 1
                continue
            row, col, coeff = int(fields[0]) - 1, int(fields[1]) - 1, float(fields[2])
            if not 0 <= row < n_workers:
                raise MatrixFormatError(f"row {row + 1} out of range")
            entries[row].append((col, coeff))
    except (ValueError, IndexError) as e:
        raise MatrixFormatError(f"bad entry line: {e}")

    if sum(len(row) for row in entries) != nnz:
        raise MatrixFormatError(f"header declares {nnz} nonzeros")
    batch_map = None
    if batches:
        if sorted(batches) != list(range(n_partitions)):
            raise MatrixFormatError("batch lines must cover every partition")
        batch_map = tuple(batches[col] for col in range(n_partitions))

    rows: Tuple[Row, ...] = tuple(tuple(sorted(row)) for row in entries)
    try:
        return CodingMatrix(
            n_workers=n_workers,
            n_partitions=n_partitions,
            rows=rows,
            scheme_tag=scheme_tag,
            batch_map=batch_map,
        )
    except ValidationError as e:
        raise MatrixFormatError(f"invalid matrix: {e.errors(include_url=False)[0]['msg']}")
