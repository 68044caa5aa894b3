"""
Domain types shared by schemes, decoders, the Monte Carlo harness and the trainer
"""
import math
from enum import Enum
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

PHILOX = "philox4x64"

Row = Tuple[Tuple[int, float], ...]


class SchemeTag(str, Enum):
    FRC = "frc"
    BRC = "brc"
    FORGET_S = "forget"
    BERNOULLI = "bernoulli"


class DecoderTag(str, Enum):
    LS = "ls"
    PEEL = "peel"
    FRC = "frc"


class RngSpec(BaseModel):
    """Philox-4x64 stream keyed by (seed, stream_id)"""
    model_config = ConfigDict(frozen=True)

    algorithm_name: Literal["philox4x64"] = PHILOX
    seed: int = Field(ge=0, lt=2**64)
    stream_id: int = Field(default=0, ge=0, lt=2**64)

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(sequence))

    def substream(self, index: int) -> "RngSpec":
        """Independent child stream, e.g. one per Monte Carlo chunk"""
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, index))
        child = int(sequence.generate_state(1, dtype=np.uint64)[0])
        return self.model_copy(update={"stream_id": child})

    def label(self) -> str:
        return f"{self.algorithm_name}:{self.seed}:{self.stream_id}"


class CodingMatrix(BaseModel):
    """
    Sparse worker-by-partition coding matrix stored as sorted rows.

    After restriction to a received set the matrix keeps its column dimension and
    remembers the original worker index of every row in `worker_ids`.
    """
    model_config = ConfigDict(frozen=True)

    n_workers: PositiveInt
    n_partitions: PositiveInt
    rows: Tuple[Row, ...]
    scheme_tag: SchemeTag
    batch_map: Optional[Tuple[int, ...]] = None
    worker_ids: Optional[Tuple[int, ...]] = None

    @model_validator(mode="after")
    def check_invariants(self) -> "CodingMatrix":
        if len(self.rows) != self.n_workers:
            raise ValueError(f"expected {self.n_workers} rows, got {len(self.rows)}")
        if self.worker_ids is not None and len(self.worker_ids) != self.n_workers:
            raise ValueError("worker_ids must name every row")

        binary = self.scheme_tag is not SchemeTag.BERNOULLI
        for i, row in enumerate(self.rows):
            previous = -1
            for col, coeff in row:
                if not 0 <= col < self.n_partitions:
                    raise ValueError(f"row {i}: partition {col} out of range")
                if col <= previous:
                    raise ValueError(f"row {i}: indices must be strictly increasing")
                if coeff == 0.0:
                    raise ValueError(f"row {i}: explicit zero coefficient")
                if binary and coeff != 1.0:
                    raise ValueError(f"row {i}: {self.scheme_tag.value} coefficients must be 1")
                previous = col

        if self.batch_map is not None:
            if len(self.batch_map) != self.n_partitions:
                raise ValueError("batch_map must assign every partition")
            members = self.batch_members()
            for i, row in enumerate(self.rows):
                cols = {col for col, _ in row}
                for batch in {self.batch_map[col] for col in cols}:
                    if not cols.issuperset(members[batch]):
                        raise ValueError(f"row {i}: batch {batch} only partially stored")
        elif self.scheme_tag is SchemeTag.BRC:
            raise ValueError("brc matrices require a batch_map")
        return self

    @property
    def n_batches(self) -> int:
        if self.batch_map is None:
            return self.n_partitions
        return max(self.batch_map) + 1

    def batch_members(self) -> Dict[int, Tuple[int, ...]]:
        """Partitions of every batch; identity batches when no batch_map is set"""
        if self.batch_map is None:
            return {col: (col,) for col in range(self.n_partitions)}
        members: Dict[int, list[int]] = {}
        for col, batch in enumerate(self.batch_map):
            members.setdefault(batch, []).append(col)
        return {batch: tuple(cols) for batch, cols in members.items()}

    def support(self, i: int) -> Tuple[int, ...]:
        return tuple(col for col, _ in self.rows[i])

    def original_worker(self, i: int) -> int:
        return i if self.worker_ids is None else self.worker_ids[i]


class ReceivedSet(BaseModel):
    """Workers whose results reached the master"""
    model_config = ConfigDict(frozen=True)

    n_workers: PositiveInt
    indices: Tuple[int, ...]

    @model_validator(mode="after")
    def check_indices(self) -> "ReceivedSet":
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be sorted and distinct")
        if self.indices and not (0 <= self.indices[0] and self.indices[-1] < self.n_workers):
            raise ValueError("indices out of range")
        return self

    @property
    def s(self) -> int:
        return self.n_workers - len(self.indices)

    def stragglers(self) -> Tuple[int, ...]:
        received = set(self.indices)
        return tuple(i for i in range(self.n_workers) if i not in received)


class DegreeDistribution(BaseModel):
    """Soliton-style degree pmf with a spike at 1 and a tail cut at D+1"""
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(gt=0.0, lt=0.25)
    D: PositiveInt
    u: float
    pmf: Tuple[Tuple[int, float], ...]

    @model_validator(mode="after")
    def check_pmf(self) -> "DegreeDistribution":
        if any(p <= 0.0 for _, p in self.pmf):
            raise ValueError("every degree probability must be positive")
        total = math.fsum(p for _, p in self.pmf)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {total!r}")
        return self

    @property
    def degrees(self) -> np.ndarray:
        return np.array([k for k, _ in self.pmf], dtype=np.int64)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.pmf], dtype=np.float64)

    def mean(self) -> float:
        return math.fsum(k * p for k, p in self.pmf)

    def sample(self, generator: np.random.Generator, size: int) -> np.ndarray:
        probabilities = self.probabilities
        return generator.choice(self.degrees, size=size, p=probabilities / probabilities.sum())


class BrcConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: PositiveInt
    delta: float = Field(gt=0.0, lt=1.0)
    epsilon: float = Field(gt=0.0, lt=0.25)

    @property
    def batch_size(self) -> int:
        return math.ceil(1.0 / math.log(1.0 / self.delta)) + 1

    @property
    def n_batches(self) -> int:
        return math.ceil(self.n / self.batch_size)

    def batches(self) -> Tuple[Tuple[int, ...], ...]:
        b = self.batch_size
        return tuple(tuple(range(i * b, min((i + 1) * b, self.n))) for i in range(self.n_batches))


class DecodeOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    decoder: DecoderTag
    recovered_partitions: Tuple[int, ...]
    coefficients: Tuple[float, ...]
    worker_ids: Tuple[int, ...]
    residual_error: float = Field(ge=0.0)
    success: bool
    peel_order: Tuple[int, ...] = ()


class TrialStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: SchemeTag
    decoder: DecoderTag
    n: PositiveInt
    s: int = Field(ge=0)
    epsilon: float = Field(ge=0.0)
    d: Optional[int] = None
    trials: PositiveInt
    failures: int = Field(ge=0)
    p_hat: float
    ci_halfwidth_3sigma: float
    mean_error: float
    error_histogram: Dict[int, int]
    seed: RngSpec

    @model_validator(mode="after")
    def check_counts(self) -> "TrialStats":
        if self.failures > self.trials:
            raise ValueError("failures cannot exceed trials")
        if sum(self.error_histogram.values()) != self.trials:
            raise ValueError("histogram counts must sum to trials")
        return self


class BoundInputs(BaseModel):
    """One (n, s, epsilon) point of a bounds sweep"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    s: int = Field(ge=0)
    epsilon: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def check_stragglers(self) -> "BoundInputs":
        if self.s >= self.n:
            raise ValueError(f"need s < n, got s={self.s}, n={self.n}")
        return self

    @property
    def delta(self) -> float:
        return self.s / self.n


class BoundRow(BaseModel):
    n: int
    s: int
    delta: float
    epsilon: float
    lb_exact: float
    lb_eps: float
    frc_load: int
    brc_expected_load: Optional[float]
    regime_flag: Literal["in-regime", "out-of-regime"]


class BrcLoad(BaseModel):
    batch_size: int
    mean_degree: float
    expected_load: float
    order_term: float


class SyntheticDataset(BaseModel):
    """Logistic-model data split evenly into n partitions, plus a held-out set"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    N: PositiveInt
    p: PositiveInt
    n_partitions: PositiveInt
    features: np.ndarray
    labels: np.ndarray
    partition_of: np.ndarray
    beta_star: np.ndarray
    holdout_features: np.ndarray
    holdout_labels: np.ndarray

    @property
    def partition_bounds(self) -> np.ndarray:
        """Start offsets of the contiguous partitions (partition_of is non-decreasing)"""
        return np.searchsorted(self.partition_of, np.arange(self.n_partitions))


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: SchemeTag
    n_workers: PositiveInt = 60
    s: int = Field(default=6, ge=0)
    epsilon: float = Field(default=0.05, ge=0.0)
    d: Optional[PositiveInt] = None
    step_size: float = Field(default=1e-4, gt=0.0)
    iterations: PositiveInt = 100
    straggler_model: Literal["uniform"] = "uniform"
    restart_on_failure: bool = True
    rng: RngSpec

    @model_validator(mode="after")
    def check_stragglers(self) -> "TrainConfig":
        if self.s >= self.n_workers:
            raise ValueError("s must be smaller than n_workers")
        return self

    @property
    def delta(self) -> float:
        return self.s / self.n_workers


class IterationRecord(BaseModel):
    iteration: int = Field(ge=0)
    loss: float
    auc: float = Field(ge=0.0, le=1.0)
    decode_residual: float = Field(ge=0.0)
    retries: int = Field(ge=0)
    fallback: bool = False


class RunConfig(BaseModel):
    """Validated view of one CLI invocation"""
    subcommand: Literal["construct", "decode", "bounds", "failprob", "curve", "train", "example1"]
    scheme: Optional[SchemeTag] = None
    decoder: Optional[DecoderTag] = None
    out: Optional[str] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    trials: Optional[PositiveInt] = None
    threads: PositiveInt = 1
    format: Literal["csv", "json"] = "csv"

    @model_validator(mode="after")
    def require_seed(self) -> "RunConfig":
        randomized = self.subcommand in {"failprob", "curve", "train"} or (
            self.subcommand == "construct" and self.scheme is not SchemeTag.FORGET_S
        )
        if randomized and self.seed is None:
            raise ValueError(f"{self.subcommand} requires an explicit --seed")
        return self


class TimeToTarget(BaseModel):
    """Iterations one scheme needs to reach a holdout AUC at a given straggler count"""

    scheme: SchemeTag
    n_workers: PositiveInt
    s: int = Field(ge=0)
    target_auc: float = Field(ge=0.0, le=1.0)
    iterations: Optional[int] = None
    final_auc: float
    total_retries: int = Field(ge=0)

    @property
    def delta(self) -> float:
        return self.s / self.n_workers
