"""
Closed-form computation-load bounds and the exact FRC failure probability.

All logarithms are natural; the load ratios are base-invariant.
"""
import itertools
import math
from fractions import Fraction
from typing import Iterable, List

from gradcode.error_handling import DomainError, InvalidArgumentError
from gradcode.schemas import BoundInputs, BoundRow, BrcConfig, BrcLoad
from gradcode.services.schemes import degree_distribution


def _check_stragglers(n: int, s: int) -> None:
    if not 0 <= s < n:
        raise InvalidArgumentError(f"need 0 <= s < n, got s={s}, n={n}", details={"n": n, "s": s})


def lb_exact(n: int, s: int) -> float:
    """Minimum load of any code with vanishing exact-recovery failure probability"""
    _check_stragglers(n, s)
    if s == 0:
        return 1.0
    inv_delta = math.log(n / s)
    value = math.log(n * inv_delta**2 / math.log(n) ** 2) / inv_delta
    return max(1.0, value)


def lb_eps(n: int, s: int, epsilon: float) -> float:
    """Minimum load when a recovery error up to epsilon * n is tolerated"""
    _check_stragglers(n, s)
    if epsilon < 0:
        raise DomainError(f"epsilon must be non-negative, got {epsilon}")
    if s == 0:
        return 1.0
    inv_delta = math.log(n / s)
    value = math.log(n * inv_delta**2 / ((2 * epsilon * n + 4) * math.log(n) ** 2)) / inv_delta
    return max(1.0, value)


def eps_in_regime(n: int, epsilon: float) -> bool:
    """The approximate lower bound is stated for epsilon below order 1/log^2 n"""
    return epsilon < 1.0 / math.log(n) ** 2


def frc_load(n: int, s: int) -> int:
    """Replication factor d that drives the FRC failure probability to zero"""
    _check_stragglers(n, s)
    if s == 0:
        return 1
    inv_delta = math.log(n / s)
    return math.ceil(max(1.0, math.log(n * inv_delta) / inv_delta))


def brc_load(n: int, s: int, epsilon: float) -> BrcLoad:
    """Expected row support b * E[degree] of the batch raptor code, plus its order term"""
    _check_stragglers(n, s)
    if s == 0:
        raise InvalidArgumentError("brc needs at least one straggler to size its batches")
    distribution = degree_distribution(epsilon)
    cfg = BrcConfig(n=n, delta=s / n, epsilon=epsilon)
    mean_degree = distribution.mean()
    return BrcLoad(
        batch_size=cfg.batch_size,
        mean_degree=mean_degree,
        expected_load=cfg.batch_size * mean_degree,
        order_term=math.log(1.0 / epsilon) / math.log(n / s),
    )


def frc_failure_probability(n: int, d: int, s: int) -> Fraction:
    """
    P(some replica block loses all d of its workers), s stragglers uniform over n,
    by full inclusion-exclusion over the n/d blocks in exact integer arithmetic.
    """
    if d < 1 or n % d:
        raise InvalidArgumentError(f"closed form needs d | n, got n={n}, d={d}", details={"n": n, "d": d})
    _check_stragglers(n, s)
    blocks = n // d
    total = math.comb(n, s)
    numerator = 0
    for i in range(1, min(blocks, s // d) + 1):
        term = math.comb(blocks, i) * math.comb(n - i * d, s - i * d)
        numerator += term if i % 2 else -term
    return Fraction(numerator, total)


def frc_failure_exact(n: int, d: int, s: int) -> float:
    return float(frc_failure_probability(n, d, s))


def frc_failure_enumerated(n: int, d: int, s: int) -> Fraction:
    """Exhaustive oracle: count straggler sets that wipe out a whole block"""
    if d < 1 or n % d:
        raise InvalidArgumentError(f"enumeration needs d | n, got n={n}, d={d}")
    _check_stragglers(n, s)
    group = n // d
    failing = 0
    total = 0
    for stragglers in itertools.combinations(range(n), s):
        total += 1
        hit = [0] * group
        for worker in stragglers:
            hit[worker % group] += 1
        if d in hit:
            failing += 1
    return Fraction(failing, total)


def bounds_table(n: int, s_values: Iterable[int], eps_values: Iterable[float]) -> List[BoundRow]:
    """Load bounds over a grid of straggler counts and tolerated errors"""
    eps_list = list(eps_values)
    rows = []
    for s in s_values:
        for epsilon in eps_list:
            rows.append(bound_row(BoundInputs(n=n, s=s, epsilon=epsilon)))
    return rows


def bound_row(point: BoundInputs) -> BoundRow:
    n, s, epsilon = point.n, point.s, point.epsilon
    brc_expected = None
    if s > 0 and 0.0 < epsilon < 0.25:
        brc_expected = brc_load(n, s, epsilon).expected_load
    return BoundRow(
        n=n,
        s=s,
        delta=point.delta,
        epsilon=epsilon,
        lb_exact=lb_exact(n, s),
        lb_eps=lb_eps(n, s, epsilon),
        frc_load=frc_load(n, s),
        brc_expected_load=brc_expected,
        regime_flag="in-regime" if eps_in_regime(n, epsilon) else "out-of-regime",
    )
