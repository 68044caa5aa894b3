"""
Monte Carlo harness estimating P(err(A_S) > eps * n) for a scheme/decoder pair
"""
import math
from collections import Counter
from contextlib import contextmanager
from typing import Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from gradcode.coding import sample_received_set
from gradcode.config import settings
from gradcode.dependencies import get_executor
from gradcode.error_handling import InvalidArgumentError
from gradcode.logging_config import get_logger
from gradcode.schemas import CodingMatrix, DecoderTag, RngSpec, SchemeTag, TrialStats
from gradcode.services.bounds import frc_load
from gradcode.services.decoding import check_pairing, decode
from gradcode.services.schemes import SchemeSpec

logger = get_logger("montecarlo")

executor_scope = contextmanager(get_executor)


class ChunkResult(BaseModel):
    trials: int
    failures: int
    error_sum: float
    histogram: dict[int, int]


def _run_chunk(
    scheme: SchemeSpec,
    decoder: DecoderTag,
    s: int,
    epsilon: float,
    trials: int,
    rng: RngSpec,
    fixed_code: Optional[CodingMatrix],
) -> ChunkResult:
    generator = rng.generator()
    failures = 0
    errors: List[float] = []
    histogram: Counter[int] = Counter()
    for _ in range(trials):
        matrix = fixed_code if fixed_code is not None else scheme.build(generator)
        received = sample_received_set(scheme.n, s, generator)
        outcome = decode(matrix, received, decoder, epsilon)
        if not outcome.success:
            failures += 1
        errors.append(outcome.residual_error)
        histogram[round(outcome.residual_error)] += 1
    return ChunkResult(trials=trials, failures=failures, error_sum=math.fsum(errors), histogram=dict(histogram))


def _chunks(trials: int) -> List[Tuple[int, int]]:
    size = settings.chunk_trials
    return [(index, min(size, trials - start)) for index, start in enumerate(range(0, trials, size))]


def estimate_failure(
    scheme: SchemeSpec,
    decoder: DecoderTag,
    n: int,
    s: int,
    epsilon: float,
    trials: int,
    rng: RngSpec,
    threads: Optional[int] = None,
    fix_code: bool = False,
) -> TrialStats:
    """
    Empirical failure probability. Randomized codes are re-drawn every trial unless
    fix_code is set; trials run in fixed-size chunks on independent substreams, so the
    result does not depend on the thread count.
    """
    if trials < 1:
        raise InvalidArgumentError(f"need at least one trial, got {trials}")
    if scheme.n != n:
        raise InvalidArgumentError(f"scheme is built for n={scheme.n}, asked for n={n}")
    if not 0 <= s < n:
        raise InvalidArgumentError(f"need 0 <= s < n, got s={s}, n={n}")
    check_pairing(scheme.scheme, decoder)

    fixed_code = None
    if fix_code or not scheme.randomized:
        fixed_code = scheme.build(rng)

    with executor_scope(threads) as executor:
        futures = [
            executor.submit(_run_chunk, scheme, decoder, s, epsilon, count, rng.substream(index), fixed_code)
            for index, count in _chunks(trials)
        ]
        results = [future.result() for future in futures]

    failures = sum(r.failures for r in results)
    histogram: Counter[int] = Counter()
    for r in results:
        histogram.update(r.histogram)
    p_hat = failures / trials
    stats = TrialStats(
        scheme=scheme.scheme,
        decoder=decoder,
        n=n,
        s=s,
        epsilon=epsilon,
        d=scheme.d,
        trials=trials,
        failures=failures,
        p_hat=p_hat,
        ci_halfwidth_3sigma=3.0 * math.sqrt(p_hat * (1.0 - p_hat) / trials),
        mean_error=math.fsum(r.error_sum for r in results) / trials,
        error_histogram=dict(sorted(histogram.items())),
        seed=rng,
    )
    logger.info(
        "failure estimate",
        scheme=scheme.scheme.value,
        decoder=decoder.value,
        n=n,
        s=s,
        trials=trials,
        p_hat=p_hat,
    )
    return stats


def curve_scheme(scheme: SchemeTag, n: int, delta: float, epsilon: float) -> SchemeSpec:
    """Scheme parameters at the load its analysis prescribes for (n, delta)"""
    s = round(delta * n)
    if scheme is SchemeTag.FRC:
        return SchemeSpec(scheme=scheme, n=n, d=frc_load(n, s))
    if scheme is SchemeTag.BRC:
        return SchemeSpec(scheme=scheme, n=n, delta=delta, epsilon=epsilon)
    if scheme is SchemeTag.BERNOULLI:
        return SchemeSpec(scheme=scheme, n=n, d=min(n, max(1, math.ceil(math.log(n)))))
    return SchemeSpec(scheme=scheme, n=n)


def failure_curve(
    scheme: SchemeTag,
    decoder: DecoderTag,
    n_list: Sequence[int],
    delta: float,
    epsilon: float,
    trials: int,
    rng: RngSpec,
    threads: Optional[int] = None,
    fix_code: bool = False,
) -> List[TrialStats]:
    if not n_list:
        raise InvalidArgumentError("n_list must not be empty")
    curve = []
    for index, n in enumerate(n_list):
        spec = curve_scheme(scheme, n, delta, epsilon)
        curve.append(estimate_failure(
            spec, decoder, n, round(delta * n), epsilon, trials, rng.substream(index), threads, fix_code
        ))
    return curve


def trial_rows(stats: Sequence[TrialStats]) -> Iterator[dict[str, object]]:
    """CSV rows: scheme, decoder, n, s, epsilon, trials, p_hat, ci, mean_error, seed"""
    for item in stats:
        yield {
            "scheme": item.scheme.value,
            "decoder": item.decoder.value,
            "n": item.n,
            "s": item.s,
            "epsilon": item.epsilon,
            "trials": item.trials,
            "p_hat": item.p_hat,
            "ci": item.ci_halfwidth_3sigma,
            "mean_error": item.mean_error,
            "seed": item.seed.label(),
        }
