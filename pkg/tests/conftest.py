"""
Shared test configuration and fixtures
"""
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pytest

from gradcode.coding import matrix_from_supports
from gradcode.config import settings
from gradcode.main import run
from gradcode.schemas import CodingMatrix, RngSpec, SchemeTag, SyntheticDataset
from gradcode.services.schemes import build_frc, example1_matrix
from gradcode.services.trainer import gen_synthetic


@pytest.fixture
def rng() -> RngSpec:
    """Fixed seed so failures reproduce"""
    return RngSpec(seed=7)


@pytest.fixture
def generator(rng) -> np.random.Generator:
    return rng.generator()


@pytest.fixture
def example1() -> CodingMatrix:
    return example1_matrix()


@pytest.fixture
def example1_variant() -> CodingMatrix:
    return example1_matrix(variant=True)


@pytest.fixture
def frc_6_2(rng) -> CodingMatrix:
    """Six workers in two groups of three, every group covering all partitions"""
    return build_frc(6, 2, rng)


@pytest.fixture
def small_dataset() -> SyntheticDataset:
    return gen_synthetic(600, 5, 6, RngSpec(seed=11))


@pytest.fixture
def small_chunks(monkeypatch):
    """Shrink Monte Carlo chunks so short runs still span several chunks"""
    monkeypatch.setattr(settings, "chunk_trials", 50)
    return 50


@pytest.fixture
def cli(capsys) -> Callable[..., Tuple[int, str, str]]:
    """Run the command line in-process, returning (exit code, stdout, stderr)"""
    def invoke(*argv: str) -> Tuple[int, str, str]:
        code = run(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return invoke


class MatrixBuilder:
    """Utility for hand-written coding matrices"""

    @staticmethod
    def binary(supports: Sequence[Sequence[int]], n_partitions: int, scheme: SchemeTag = SchemeTag.FORGET_S) -> CodingMatrix:
        return matrix_from_supports([tuple(s) for s in supports], n_partitions, scheme)

    @staticmethod
    def stragglers_complement(n: int, stragglers: Sequence[int]) -> List[int]:
        lost = set(stragglers)
        return [i for i in range(n) if i not in lost]


@pytest.fixture
def matrix_builder():
    return MatrixBuilder


def pytest_collection_modifyitems(config, items):
    """Automatically mark tests based on location"""
    for item in items:
        path = str(item.fspath)
        if "unit" in path:
            item.add_marker(pytest.mark.unit)
        elif "integration" in path:
            item.add_marker(pytest.mark.integration)
        elif "e2e" in path:
            item.add_marker(pytest.mark.e2e)
