"""Shared generators for randomized suites (all explicitly seeded)."""

import numpy as np
import pytest

from blepi.datum import Datum, Partition
from blepi.gauss import BlockCovariance, GaussianPair


def random_partition(rng, max_blocks=3, max_block_dim=2):
    k = int(rng.integers(1, max_blocks + 1))
    return Partition(tuple(int(rng.integers(1, max_block_dim + 1)) for _ in range(k)))


def random_datum(rng, max_n=6, balanced=False):
    """Random valid datum with full-row-rank Gaussian maps.

    With balanced=True the c exponents are rescaled so the total scaling
    balance holds exactly.
    """
    while True:
        part = random_partition(rng)
        if part.n <= max_n:
            break
    n = part.n
    m = int(rng.integers(1, 4))
    maps = []
    for _ in range(m):
        nj = int(rng.integers(1, n + 1))
        while True:
            A = rng.standard_normal((nj, n))
            if np.linalg.matrix_rank(A) == nj:
                break
        maps.append(A)
    c = rng.uniform(0.2, 1.5, m)
    d = rng.uniform(0.2, 1.5, part.k)
    if balanced:
        image_total = sum(cj * A.shape[0] for cj, A in zip(c, maps))
        c = c * (float(np.dot(d, part.blocks)) / image_total)
    return Datum(partition=part, maps=tuple(maps), c=c, d=d)


def random_block_covariance(rng, partition):
    blocks = []
    for r in partition.blocks:
        G = rng.standard_normal((r, r))
        blocks.append(G @ G.T + (0.5 + rng.uniform()) * np.eye(r))
    return BlockCovariance(tuple(blocks))


def random_pair(rng, partition):
    blocks = []
    for r in partition.blocks:
        G = rng.standard_normal((2 * r, 2 * r))
        blocks.append(G @ G.T + (0.5 + rng.uniform()) * np.eye(2 * r))
    return GaussianPair(tuple(blocks))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
