"""
End-to-end checks of the published behaviour: golden traces, oracles and the
training experiment at desk scale
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from gradcode.coding import computation_load, received_from_stragglers, restrict, sample_received_set
from gradcode.schemas import BrcConfig, DecoderTag, RngSpec, SchemeTag, TrainConfig
from gradcode.services.bounds import (
    bounds_table,
    brc_load,
    frc_failure_enumerated,
    frc_failure_probability,
    frc_load,
    lb_exact,
)
from gradcode.services.decoding import decode_frc, exact_decodable, peel_decode, recovery_error_ls
from gradcode.services.montecarlo import estimate_failure, failure_curve
from gradcode.services.schemes import (
    SchemeSpec,
    build_bernoulli,
    build_brc,
    build_forget_s,
    build_frc,
    degree_distribution,
    example1_matrix,
)
from gradcode.services.trainer import (
    compare_schemes,
    full_gradient,
    gen_synthetic,
    log_likelihood,
    train,
    uncoded_train,
)

pytestmark = pytest.mark.slow


class TestExampleTraces:
    """Six-worker peeling illustration"""

    def test_full_and_partial_recovery(self):
        full = peel_decode(restrict(example1_matrix(), received_from_stragglers(6, [4, 5])))
        assert full.peel_order == (0, 1, 3, 2)
        assert full.residual_error == 0.0

        partial = peel_decode(restrict(example1_matrix(variant=True), received_from_stragglers(6, [3, 5])))
        assert partial.recovered_partitions == (0, 1, 4, 5)
        assert partial.residual_error == 2.0


class TestFrcOracle:
    """Closed-form failure probability"""

    def test_closed_form_equals_enumeration(self):
        for n in range(2, 13):
            for d in (d for d in range(1, n + 1) if n % d == 0):
                for s in range(1, n // 2 + 1):
                    assert frc_failure_probability(n, d, s) == frc_failure_enumerated(n, d, s)

    def test_monte_carlo_within_three_sigma(self):
        assert frc_failure_probability(4, 2, 2) == Fraction(1, 3)
        stats = estimate_failure(
            SchemeSpec(scheme=SchemeTag.FRC, n=4, d=2), DecoderTag.FRC, 4, 2, 0.0, 100_000, RngSpec(seed=7)
        )
        assert abs(stats.p_hat - 1 / 3) <= 3 * math.sqrt((1 / 3) * (2 / 3) / 100_000)


class TestLeastSquaresOnFrc:
    """LS error counts d per fully straggled block"""

    def test_randomized_instances(self):
        generator = RngSpec(seed=21).generator()
        cases = [(n, d) for n in range(2, 31) for d in range(1, 6) if n % d == 0]
        for _ in range(500):
            n, d = cases[int(generator.integers(len(cases)))]
            s = int(generator.integers(0, n))
            matrix = build_frc(n, d, generator)
            received = sample_received_set(n, s, generator)

            group = n // d
            lost = np.zeros(group, dtype=int)
            for worker in received.stragglers():
                lost[worker % group] += 1
            lost_blocks = int(np.count_nonzero(lost == d))

            error, _ = recovery_error_ls(restrict(matrix, received))
            assert error == pytest.approx(d * lost_blocks, abs=1e-9)
            assert exact_decodable(restrict(matrix, received)) == decode_frc(matrix, received).success


class TestDegreeDistribution:
    """Normalization and reference moments"""

    def test_normalized(self):
        for epsilon in (0.01, 0.02, 0.05, 0.1, 0.2):
            total = math.fsum(p for _, p in degree_distribution(epsilon).pmf)
            assert 1 - 1e-12 <= total <= 1 + 1e-12

    def test_reference_values(self):
        distribution = degree_distribution(0.1)
        assert distribution.pmf[0][1] == pytest.approx(4 / 13)
        assert distribution.mean() == pytest.approx(3.0277, abs=1e-3)


class TestFrcVanishingFailure:
    """Failure probability shrinks with n at the analytic load"""

    def test_decreasing_curve(self):
        curve = failure_curve(SchemeTag.FRC, DecoderTag.FRC, [100, 300, 1000], 0.1, 0.0, 10_000, RngSpec(seed=3))
        p = [stats.p_hat for stats in curve]
        ci = [stats.ci_halfwidth_3sigma for stats in curve]
        if max(p) >= 0.01:
            assert p[0] - ci[0] > p[1] + ci[1]
            assert p[1] - ci[1] > p[2] + ci[2]
        assert [stats.d for stats in curve] == [frc_load(100, 10), frc_load(300, 30), frc_load(1000, 100)]


class TestBrcPerformance:
    """Peeling failure rate and average load"""

    def test_failure_rate(self):
        spec = SchemeSpec(scheme=SchemeTag.BRC, n=1000, delta=0.1, epsilon=0.05)
        stats = estimate_failure(spec, DecoderTag.PEEL, 1000, 100, 0.05, 1000, RngSpec(seed=5))
        assert stats.p_hat < 0.05

    def test_mean_row_support(self):
        generator = RngSpec(seed=6).generator()
        cfg = BrcConfig(n=1000, delta=0.1, epsilon=0.05)
        supports = [len(row) for _ in range(20) for row in build_brc(cfg, generator).rows]
        expected = brc_load(1000, 100, 0.05).expected_load
        assert np.mean(supports) == pytest.approx(expected, rel=0.05)


class TestDecoderDominance:
    """Least squares never does worse than peeling"""

    def test_random_schemes(self):
        generator = RngSpec(seed=8).generator()
        builders = [
            lambda n: build_frc(n, 3, generator),
            lambda n: build_brc(BrcConfig(n=n, delta=0.1, epsilon=0.1), generator),
            lambda n: build_forget_s(n),
            lambda n: build_bernoulli(n, 4, generator),
        ]
        for trial in range(1000):
            n = int(generator.integers(12, 41))
            matrix = builders[trial % len(builders)](n)
            s = int(generator.integers(0, n // 2))
            received = restrict(matrix, sample_received_set(n, s, generator))
            error, _ = recovery_error_ls(received)
            assert error <= peel_decode(received).residual_error + 1e-9


class TestBoundsSweep:
    """Reference point and orderings of the load bounds"""

    def test_sweep(self):
        rows = bounds_table(1000, range(10, 501, 10), [0.0, 0.001, 0.01])
        assert lb_exact(1000, 100) == pytest.approx(2.046, abs=1e-3)
        assert math.ceil(lb_exact(1000, 100)) == 3
        by_s = {}
        for row in rows:
            by_s.setdefault(row.s, []).append(row)
        for s_rows in by_s.values():
            values = [row.lb_eps for row in s_rows]
            assert values == sorted(values, reverse=True)
            assert s_rows[0].lb_eps <= s_rows[0].lb_exact

    def test_tolerance_gain_at_reference_point(self):
        # lb_eps floors at 1, so the exact-to-approximate load ratio is 3
        (row,) = bounds_table(1000, [100], [0.01])
        assert row.lb_eps == 1.0
        assert math.ceil(row.lb_exact) / row.lb_eps == 3.0


class TestTrainingExperiment:
    """Default synthetic problem"""

    @pytest.fixture(scope="class")
    def dataset(self):
        return gen_synthetic(20_000, 50, 60, RngSpec(seed=1))

    @pytest.fixture(scope="class")
    def baseline(self, dataset):
        return uncoded_train(dataset, 1e-4, 100)

    def test_baseline_monotone(self, baseline):
        assert all(b < a for a, b in zip(baseline, baseline[1:]))

    def test_coded_schemes_track_baseline(self, dataset, baseline):
        finals = {}
        for scheme in (SchemeTag.FRC, SchemeTag.BRC, SchemeTag.FORGET_S):
            records = train(dataset, TrainConfig(scheme=scheme, rng=RngSpec(seed=2)))
            finals[scheme] = records[-1].loss
        assert finals[SchemeTag.FRC] == pytest.approx(baseline[-1], rel=0.02)
        assert finals[SchemeTag.BRC] == pytest.approx(baseline[-1], rel=0.02)
        assert finals[SchemeTag.FORGET_S] >= finals[SchemeTag.FRC]

    def test_frc_retries(self, dataset):
        totals = []
        for seed in range(10):
            records = train(dataset, TrainConfig(scheme=SchemeTag.FRC, rng=RngSpec(seed=seed)))
            totals.append(sum(r.retries for r in records))
        assert np.median(totals) <= 5

    def test_gradient_against_finite_differences(self, dataset):
        beta = RngSpec(seed=4).generator().standard_normal(50) * 0.1
        h = 1e-4
        numeric = np.array([
            (log_likelihood(dataset, beta + h * e) - log_likelihood(dataset, beta - h * e)) / (2 * h)
            for e in np.eye(50)
        ])
        analytic = full_gradient(dataset, beta)
        assert np.linalg.norm(numeric - analytic) <= 1e-5 * np.linalg.norm(analytic)

    def test_frc_load_matches_analytic(self):
        assert computation_load(build_frc(60, frc_load(60, 6), RngSpec(seed=0))) == 3

    def test_time_to_auc_across_straggler_fractions(self, dataset):
        reference = train(dataset, TrainConfig(scheme=SchemeTag.FORGET_S, s=0, iterations=30, rng=RngSpec(seed=5)))
        target = reference[-1].auc - 0.01
        base = TrainConfig(scheme=SchemeTag.FRC, iterations=30, rng=RngSpec(seed=5))
        schemes = [SchemeTag.FRC, SchemeTag.BRC, SchemeTag.FORGET_S]

        rows = compare_schemes(dataset, base, schemes, [6, 12, 18], target_auc=target)

        assert sorted({round(row.delta, 2) for row in rows}) == [0.1, 0.2, 0.3]
        assert len(rows) == 9
        for row in rows:
            if row.scheme is not SchemeTag.FORGET_S:
                assert row.iterations is not None and row.iterations <= 30
