"""
Unit tests for coding matrices, straggler sampling and the triplet format
"""
import math
from collections import Counter

import numpy as np
import pytest
from pydantic import ValidationError

from gradcode.coding import (
    column_weights,
    computation_load,
    dump_triplets,
    encode,
    load_triplets,
    lost_partitions,
    received_from_stragglers,
    restrict,
    sample_received_set,
    to_dense,
)
from gradcode.error_handling import InvalidArgumentError, MatrixFormatError
from gradcode.schemas import CodingMatrix, ReceivedSet, RngSpec, SchemeTag
from gradcode.services.schemes import build_bernoulli


class TestMatrixMetrics:
    """Computation load and per-partition replication"""

    def test_computation_load_is_largest_row(self, example1):
        assert computation_load(example1) == 4

    def test_column_weights(self, example1):
        assert column_weights(example1).tolist() == [2, 3, 1, 1, 4, 4]

    def test_lost_partitions(self, matrix_builder):
        matrix = matrix_builder.binary([(0, 1), (1,), (3,)], 4)
        assert lost_partitions(matrix) == {2}

    def test_dense_and_encode(self, matrix_builder):
        matrix = matrix_builder.binary([(0, 1), (2,)], 3)
        dense = to_dense(matrix)
        assert dense.tolist() == [[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]

        gradients = np.arange(6.0).reshape(3, 2)
        np.testing.assert_allclose(encode(matrix, gradients), [[2.0, 4.0], [4.0, 5.0]])


class TestMatrixValidation:
    """Structural invariants enforced when a matrix is built"""

    def test_rejects_unsorted_row(self):
        with pytest.raises(ValidationError):
            CodingMatrix(n_workers=1, n_partitions=3, rows=(((2, 1.0), (0, 1.0)),), scheme_tag=SchemeTag.FRC)

    def test_rejects_out_of_range_partition(self):
        with pytest.raises(ValidationError):
            CodingMatrix(n_workers=1, n_partitions=2, rows=(((2, 1.0),),), scheme_tag=SchemeTag.FRC)

    def test_rejects_non_binary_coefficient(self):
        with pytest.raises(ValidationError):
            CodingMatrix(n_workers=1, n_partitions=2, rows=(((0, 0.5),),), scheme_tag=SchemeTag.FRC)

    def test_brc_requires_batch_map(self):
        with pytest.raises(ValidationError):
            CodingMatrix(n_workers=1, n_partitions=2, rows=(((0, 1.0),),), scheme_tag=SchemeTag.BRC)

    def test_brc_rows_store_whole_batches(self):
        with pytest.raises(ValidationError):
            CodingMatrix(
                n_workers=1,
                n_partitions=2,
                rows=(((0, 1.0),),),
                scheme_tag=SchemeTag.BRC,
                batch_map=(0, 0),
            )

    def test_batch_members(self, example1):
        assert example1.batch_members() == {0: (0,), 1: (1,), 2: (2, 3), 3: (4, 5)}
        assert example1.n_batches == 4


class TestStragglerSampling:
    """Uniform received sets"""

    def test_sample_size_and_order(self, rng):
        received = sample_received_set(20, 5, rng)
        assert len(received.indices) == 15
        assert list(received.indices) == sorted(set(received.indices))
        assert received.s == 5

    def test_same_seed_same_sample(self):
        first = sample_received_set(50, 10, RngSpec(seed=3))
        second = sample_received_set(50, 10, RngSpec(seed=3))
        assert first == second

    def test_no_stragglers_keeps_everyone(self, rng):
        assert sample_received_set(5, 0, rng).indices == (0, 1, 2, 3, 4)

    def test_every_subset_equally_likely(self, generator):
        draws = 60000
        counts = Counter(sample_received_set(4, 2, generator).indices for _ in range(draws))
        assert len(counts) == 6
        p = 1 / 6
        three_sigma = 3 * math.sqrt(p * (1 - p) / draws)
        for subset, count in counts.items():
            assert abs(count / draws - p) <= three_sigma, subset

    @pytest.mark.parametrize("s", [-1, 5, 6])
    def test_rejects_invalid_straggler_count(self, rng, s):
        with pytest.raises(InvalidArgumentError):
            sample_received_set(5, s, rng)

    def test_received_from_stragglers(self):
        received = received_from_stragglers(6, [4, 5])
        assert received.indices == (0, 1, 2, 3)
        assert received.stragglers() == (4, 5)

    def test_received_from_stragglers_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            received_from_stragglers(6, [6])

    def test_received_set_must_be_sorted(self):
        with pytest.raises(ValidationError):
            ReceivedSet(n_workers=4, indices=(2, 1))


class TestRestrict:
    """Row submatrix A_S"""

    def test_restrict_keeps_original_worker_ids(self, example1):
        restricted = restrict(example1, received_from_stragglers(6, [1, 3]))
        assert restricted.n_workers == 4
        assert restricted.worker_ids == (0, 2, 4, 5)
        assert restricted.n_partitions == 6
        assert restricted.rows[1] == example1.rows[2]

    def test_restrict_keeps_coefficients_and_load(self, generator):
        matrix = build_bernoulli(30, 5, generator)
        for s in (0, 5, 15, 29):
            received = sample_received_set(30, s, generator)
            restricted = restrict(matrix, received)
            assert computation_load(restricted) <= computation_load(matrix)
            for k, i in enumerate(received.indices):
                assert restricted.rows[k] == matrix.rows[i]

    def test_lost_partitions_shrink_as_workers_arrive(self, generator):
        matrix = build_bernoulli(20, 2, generator)
        arrival = [int(i) for i in generator.permutation(20)]
        previous = set(range(20))
        for size in range(1, 21):
            received = ReceivedSet(n_workers=20, indices=tuple(sorted(arrival[:size])))
            lost = lost_partitions(restrict(matrix, received))
            assert lost <= previous
            previous = lost
        assert previous == lost_partitions(matrix)

    def test_restrict_rejects_mismatched_size(self, example1):
        with pytest.raises(InvalidArgumentError):
            restrict(example1, ReceivedSet(n_workers=5, indices=(0, 1)))

    def test_restrict_rejects_empty_set(self, example1):
        with pytest.raises(InvalidArgumentError):
            restrict(example1, ReceivedSet(n_workers=6, indices=()))


class TestTriplets:
    """Plain-text matrix files with 1-based indices"""

    def test_dump_uses_one_based_indices(self, matrix_builder):
        text = dump_triplets(matrix_builder.binary([(0,), (1, 2)], 3, SchemeTag.FRC))
        assert text.splitlines() == ["2 3 3 frc", "1 1 1.0", "2 2 1.0", "2 3 1.0"]

    def test_load_restores_brc_matrix(self, example1):
        assert load_triplets(dump_triplets(example1)) == example1

    def test_load_rejects_missing_header(self):
        with pytest.raises(MatrixFormatError):
            load_triplets("1 1 1.0\n")

    def test_load_rejects_wrong_nnz(self):
        with pytest.raises(MatrixFormatError):
            load_triplets("1 2 3 frc\n1 1 1.0\n")

    def test_load_rejects_unknown_scheme(self):
        with pytest.raises(MatrixFormatError):
            load_triplets("1 1 1 mds\n1 1 1.0\n")

    def test_load_rejects_row_out_of_range(self):
        with pytest.raises(MatrixFormatError):
            load_triplets("1 1 1 frc\n2 1 1.0\n")
