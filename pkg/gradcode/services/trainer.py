"""
Distributed gradient descent for logistic regression with simulated stragglers
"""
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from gradcode.coding import RandomSource, as_generator, encode, restrict, sample_received_set
from gradcode.config import settings
from gradcode.error_handling import InvalidArgumentError, UndefinedMetricError
from gradcode.logging_config import get_logger
from gradcode.schemas import (
    BrcConfig,
    CodingMatrix,
    DecodeOutcome,
    IterationRecord,
    SchemeTag,
    SyntheticDataset,
    TimeToTarget,
    TrainConfig,
)
from gradcode.services.bounds import frc_load
from gradcode.services.decoding import decode_frc, decode_ls, peel_decode
from gradcode.services.schemes import build_bernoulli, build_brc, build_frc, build_forget_s

logger = get_logger("trainer")


def gen_synthetic(
    N: int,
    p: int,
    n_partitions: int,
    rng: RandomSource,
    holdout_fraction: float = 0.2,
) -> SyntheticDataset:
    """Gaussian features, labels from a logistic model with a random ground truth"""
    if N < n_partitions:
        raise InvalidArgumentError(f"need N >= n_partitions, got N={N}, n={n_partitions}")
    if p < 1:
        raise InvalidArgumentError(f"need p >= 1, got {p}")

    generator = as_generator(rng)
    beta_star = generator.standard_normal(p) * (2.0 / math.sqrt(p))
    holdout = max(2, round(N * holdout_fraction))
    features = generator.standard_normal((N + holdout, p))
    probabilities = expit(features @ beta_star)
    labels = (generator.random(N + holdout) < probabilities).astype(np.float64)
    # AUC is undefined on a single-class holdout
    while np.unique(labels[N:]).size < 2:
        labels[N:] = generator.random(holdout) < probabilities[N:]

    sizes = [len(part) for part in np.array_split(np.arange(N), n_partitions)]
    partition_of = np.repeat(np.arange(n_partitions), sizes)
    return SyntheticDataset(
        N=N,
        p=p,
        n_partitions=n_partitions,
        features=features[:N],
        labels=labels[:N],
        partition_of=partition_of,
        beta_star=beta_star,
        holdout_features=features[N:],
        holdout_labels=labels[N:],
    )


def partial_gradients(dataset: SyntheticDataset, beta: np.ndarray) -> np.ndarray:
    """Row k is sum_{i in D_k} (y_i - sigma(beta^T x_i)) x_i"""
    residual = dataset.labels - expit(dataset.features @ beta)
    return np.add.reduceat(residual[:, None] * dataset.features, dataset.partition_bounds, axis=0)


def partial_gradient(dataset: SyntheticDataset, k: int, beta: np.ndarray) -> np.ndarray:
    if beta.shape != (dataset.p,):
        raise InvalidArgumentError(f"beta must have dimension {dataset.p}")
    mask = dataset.partition_of == k
    x = dataset.features[mask]
    return (dataset.labels[mask] - expit(x @ beta)) @ x


def full_gradient(dataset: SyntheticDataset, beta: np.ndarray) -> np.ndarray:
    return (dataset.labels - expit(dataset.features @ beta)) @ dataset.features


def log_likelihood(dataset: SyntheticDataset, beta: np.ndarray) -> float:
    z = dataset.features @ beta
    return float(np.sum(dataset.labels * z - np.logaddexp(0.0, z)))


def loss(dataset: SyntheticDataset, beta: np.ndarray) -> float:
    """Mean negative log-likelihood"""
    return -log_likelihood(dataset, beta) / dataset.N


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """P(random positive outranks random negative), ties counted half"""
    labels = np.asarray(labels) > 0.5
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("auc needs both positive and negative labels")
    ranks = rankdata(scores)
    u_statistic = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def build_code(cfg: TrainConfig) -> CodingMatrix:
    n = cfg.n_workers
    code_rng = cfg.rng.substream(0)
    if cfg.scheme is SchemeTag.FRC:
        return build_frc(n, cfg.d or frc_load(n, cfg.s), code_rng)
    if cfg.scheme is SchemeTag.BRC:
        brc = BrcConfig(n=n, delta=max(cfg.s, 1) / n, epsilon=cfg.epsilon)
        return build_brc(brc, code_rng)
    if cfg.scheme is SchemeTag.BERNOULLI:
        return build_bernoulli(n, cfg.d or min(n, math.ceil(math.log(n))), code_rng)
    return build_forget_s(n)


def _decode_step(
    cfg: TrainConfig,
    matrix: CodingMatrix,
    coded: np.ndarray,
    generator: np.random.Generator,
) -> Tuple[np.ndarray, float, bool]:
    received = sample_received_set(cfg.n_workers, cfg.s, generator)
    rows = np.asarray(received.indices)
    if cfg.scheme is SchemeTag.FORGET_S:
        return coded[rows].sum(axis=0), float(cfg.s), True

    outcome: DecodeOutcome
    if cfg.scheme is SchemeTag.FRC:
        outcome = decode_frc(matrix, received, cfg.epsilon)
    elif cfg.scheme is SchemeTag.BRC:
        outcome = peel_decode(restrict(matrix, received), 1.0 - cfg.epsilon)
    else:
        outcome = decode_ls(restrict(matrix, received), cfg.epsilon)
    aggregate = np.asarray(outcome.coefficients) @ coded[rows]
    return aggregate, outcome.residual_error, outcome.success


def train(
    dataset: SyntheticDataset,
    cfg: TrainConfig,
    matrix: Optional[CodingMatrix] = None,
) -> List[IterationRecord]:
    """
    Gradient ascent on the log-likelihood. Each iteration erases s random workers,
    decodes the coded partial gradients and, with restart_on_failure, redraws the
    stragglers until decoding meets the eps threshold or the retry cap is hit, in
    which case the partial aggregate is used.
    """
    if dataset.n_partitions != cfg.n_workers:
        raise InvalidArgumentError(
            f"dataset has {dataset.n_partitions} partitions for {cfg.n_workers} workers"
        )
    matrix = matrix or build_code(cfg)
    if matrix.scheme_tag is not cfg.scheme or matrix.n_workers != cfg.n_workers:
        raise InvalidArgumentError("coding matrix does not match the training scheme")

    generator = cfg.rng.substream(1).generator()
    beta = np.zeros(dataset.p)
    records = [IterationRecord(
        iteration=0,
        loss=loss(dataset, beta),
        auc=auc(dataset.holdout_features @ beta, dataset.holdout_labels),
        decode_residual=0.0,
        retries=0,
    )]

    for t in range(1, cfg.iterations + 1):
        coded = encode(matrix, partial_gradients(dataset, beta))
        retries = 0
        aggregate, residual, success = _decode_step(cfg, matrix, coded, generator)
        while not success and cfg.restart_on_failure and retries < settings.max_retries:
            retries += 1
            aggregate, residual, success = _decode_step(cfg, matrix, coded, generator)

        beta = beta + cfg.step_size * aggregate
        records.append(IterationRecord(
            iteration=t,
            loss=loss(dataset, beta),
            auc=auc(dataset.holdout_features @ beta, dataset.holdout_labels),
            decode_residual=residual,
            retries=retries,
            fallback=not success and cfg.restart_on_failure,
        ))

    logger.info(
        "training finished",
        scheme=cfg.scheme.value,
        iterations=cfg.iterations,
        final_loss=records[-1].loss,
        total_retries=sum(r.retries for r in records),
    )
    return records


def uncoded_train(dataset: SyntheticDataset, step_size: float, iterations: int) -> List[float]:
    """Loss trajectory of plain full-batch gradient descent"""
    beta = np.zeros(dataset.p)
    losses = [loss(dataset, beta)]
    for _ in range(iterations):
        beta = beta + step_size * full_gradient(dataset, beta)
        losses.append(loss(dataset, beta))
    return losses


def iterations_to_auc(records: Iterable[IterationRecord], target: float) -> Optional[int]:
    """First iteration whose holdout AUC reaches target, None if it never does"""
    for record in records:
        if record.auc >= target:
            return record.iteration
    return None


def compare_schemes(
    dataset: SyntheticDataset,
    base: TrainConfig,
    schemes: Sequence[SchemeTag],
    straggler_counts: Sequence[int],
    target_auc: float,
) -> List[TimeToTarget]:
    """
    Train every scheme at every straggler count with the remaining parameters of base
    and report how many iterations each run needs to reach target_auc.
    """
    rows = []
    for s in straggler_counts:
        for scheme in schemes:
            cfg = TrainConfig.model_validate({**base.model_dump(), "scheme": scheme, "s": s})
            records = train(dataset, cfg)
            rows.append(TimeToTarget(
                scheme=scheme,
                n_workers=cfg.n_workers,
                s=s,
                target_auc=target_auc,
                iterations=iterations_to_auc(records, target_auc),
                final_auc=records[-1].auc,
                total_retries=sum(r.retries for r in records),
            ))
            logger.debug("scheme compared", scheme=scheme.value, s=s, iterations=rows[-1].iterations)
    return rows
