"""
Coding scheme constructors: d-fractional repetition, batch raptor, forget-s and the
Bernoulli baseline
"""
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from gradcode.coding import RandomSource, as_generator, matrix_from_supports
from gradcode.error_handling import DomainError, InvalidArgumentError
from gradcode.logging_config import get_logger
from gradcode.schemas import BrcConfig, CodingMatrix, DegreeDistribution, SchemeTag

logger = get_logger("schemes")

EXAMPLE1_BATCHES: Tuple[Tuple[int, ...], ...] = ((0,), (1,), (2, 3), (4, 5))
EXAMPLE1_WORKERS: Tuple[Tuple[int, ...], ...] = ((0, 1), (0,), (1, 3), (2, 3), (3,), (1, 3))
EXAMPLE1_VARIANT_WORKERS: Tuple[Tuple[int, ...], ...] = ((0, 1), (0,), (1,), (2,), (3,), (0, 1))


def degree_distribution(epsilon: float) -> DegreeDistribution:
    """
    Degree pmf of the batch raptor code:

        p_1 = u/(u+1),  p_k = 1/(k(k-1)(u+1)) for 2 <= k <= D,  p_{D+1} = 1/(D(u+1))

    with D = floor(1/eps) and u = 2 eps (1 - 2 eps) / (1 - 4 eps)^2.
    """
    if not 0.0 < epsilon < 0.25:
        raise DomainError(f"epsilon must lie in (0, 0.25), got {epsilon}", details={"epsilon": epsilon})

    D = math.floor(1.0 / epsilon)
    u = 2.0 * epsilon * (1.0 - 2.0 * epsilon) / (1.0 - 4.0 * epsilon) ** 2
    pmf = [(1, u / (u + 1.0))]
    pmf.extend((k, 1.0 / (k * (k - 1) * (u + 1.0))) for k in range(2, D + 1))
    pmf.append((D + 1, 1.0 / (D * (u + 1.0))))
    return DegreeDistribution(epsilon=epsilon, D=D, u=u, pmf=tuple(pmf))


def _split_evenly(n: int, parts: int) -> List[Tuple[int, ...]]:
    """Contiguous ranges covering [0, n), largest ranges first"""
    size, larger = divmod(n, parts)
    ranges = []
    start = 0
    for j in range(parts):
        end = start + size + (1 if j < larger else 0)
        ranges.append(tuple(range(start, end)))
        start = end
    return ranges


def build_frc(n: int, d: int, rng: RandomSource) -> CodingMatrix:
    """
    d replica groups; inside a group the workers split all n partitions into disjoint
    contiguous ranges. When d does not divide n, mod(n, d) randomly chosen groups get
    one extra worker.
    """
    if not 1 <= d <= n:
        raise InvalidArgumentError(f"need 1 <= d <= n, got d={d}, n={n}", details={"n": n, "d": d})

    group_size, extra = divmod(n, d)
    enlarged: set[int] = set()
    if extra:
        enlarged = {int(g) for g in as_generator(rng).choice(d, size=extra, replace=False)}

    supports: List[Tuple[int, ...]] = []
    for group in range(d):
        supports.extend(_split_evenly(n, group_size + (1 if group in enlarged else 0)))

    logger.debug("built frc", n=n, d=d, enlarged_groups=sorted(enlarged))
    return matrix_from_supports(supports, n, SchemeTag.FRC)


def brc_from_assignment(
    n: int,
    batches: Sequence[Sequence[int]],
    worker_batches: Sequence[Iterable[int]],
) -> CodingMatrix:
    """BRC matrix from explicit batches and the batch set of every worker"""
    batch_map = [-1] * n
    for batch_id, members in enumerate(batches):
        for col in members:
            if not 0 <= col < n or batch_map[col] != -1:
                raise InvalidArgumentError("batches must partition the data partitions", details={"partition": col})
            batch_map[col] = batch_id
    if -1 in batch_map:
        raise InvalidArgumentError("batches must partition the data partitions")

    supports = []
    for chosen in worker_batches:
        support: List[int] = []
        for batch_id in chosen:
            support.extend(batches[int(batch_id)])
        supports.append(support)
    return matrix_from_supports(supports, n, SchemeTag.BRC, batch_map=tuple(batch_map))


def build_brc(
    cfg: BrcConfig,
    rng: RandomSource,
    distribution: Optional[DegreeDistribution] = None,
) -> CodingMatrix:
    """
    Every worker draws a degree from the distribution and stores that many distinct,
    uniformly chosen batches of size b.
    """
    distribution = distribution or degree_distribution(cfg.epsilon)
    n_batches = cfg.n_batches
    if n_batches < distribution.D + 1:
        logger.warning("degrees clamped to batch count", n_batches=n_batches, max_degree=distribution.D + 1)

    generator = as_generator(rng)
    degrees = np.minimum(distribution.sample(generator, cfg.n), n_batches)
    worker_batches = [
        np.sort(generator.choice(n_batches, size=int(k), replace=False)) for k in degrees
    ]
    return brc_from_assignment(cfg.n, cfg.batches(), worker_batches)


def build_forget_s(n: int) -> CodingMatrix:
    if n < 1:
        raise InvalidArgumentError(f"need n >= 1, got {n}")
    return matrix_from_supports(((i,) for i in range(n)), n, SchemeTag.FORGET_S)


def build_bernoulli(n: int, d: int, rng: RandomSource) -> CodingMatrix:
    """Each (worker, partition) pair kept with probability d/n; empty rows are re-drawn"""
    if not 1 <= d <= n:
        raise InvalidArgumentError(f"need 1 <= d <= n, got d={d}, n={n}", details={"n": n, "d": d})

    generator = as_generator(rng)
    p = d / n
    mask = generator.random((n, n)) < p
    for i in range(n):
        while not mask[i].any():
            mask[i] = generator.random(n) < p
    return matrix_from_supports((np.flatnonzero(row) for row in mask), n, SchemeTag.BERNOULLI)


def example1_matrix(variant: bool = False) -> CodingMatrix:
    """The six-worker batch raptor assignment used to illustrate peeling"""
    workers = EXAMPLE1_VARIANT_WORKERS if variant else EXAMPLE1_WORKERS
    return brc_from_assignment(6, EXAMPLE1_BATCHES, workers)


class SchemeSpec(BaseModel):
    """Everything needed to (re)build one scheme's coding matrix"""
    model_config = ConfigDict(frozen=True)

    scheme: SchemeTag
    n: PositiveInt
    d: Optional[PositiveInt] = None
    delta: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    epsilon: Optional[float] = Field(default=None, gt=0.0, lt=0.25)

    @model_validator(mode="after")
    def check_parameters(self) -> "SchemeSpec":
        if self.scheme in (SchemeTag.FRC, SchemeTag.BERNOULLI) and self.d is None:
            raise ValueError(f"{self.scheme.value} needs d")
        if self.scheme is SchemeTag.BRC and (self.delta is None or self.epsilon is None):
            raise ValueError("brc needs delta and epsilon")
        return self

    @property
    def randomized(self) -> bool:
        """Whether the code itself is random (re-drawn per Monte Carlo trial)"""
        return self.scheme in (SchemeTag.BRC, SchemeTag.BERNOULLI)

    def brc_config(self) -> BrcConfig:
        assert self.delta is not None and self.epsilon is not None
        return BrcConfig(n=self.n, delta=self.delta, epsilon=self.epsilon)

    def build(self, rng: RandomSource) -> CodingMatrix:
        if self.scheme is SchemeTag.FRC:
            assert self.d is not None
            return build_frc(self.n, self.d, rng)
        if self.scheme is SchemeTag.BRC:
            return build_brc(self.brc_config(), rng)
        if self.scheme is SchemeTag.BERNOULLI:
            assert self.d is not None
            return build_bernoulli(self.n, self.d, rng)
        return build_forget_s(self.n)
