"""Shared fixtures: the worked 2x4 example and random workload helpers."""

from __future__ import annotations

import numpy as np
import pytest

from sparse_abft import (
    ArrayConfig,
    DenseMatrix,
    SparsityPattern,
    pack,
    prune_magnitude,
)


@pytest.fixture
def tiny_cfg():
    """1x2 array: one PE row of four lanes, two output columns."""
    return ArrayConfig(rows=1, cols=2)


@pytest.fixture
def worked_example(tiny_cfg):
    """A = [[1,2,3,4],[5,6,7,8]], W columns (1@0, -1@2) and (2@1, 3@3).

    Product is [[-2, 16], [-2, 36]]; both checksum sides equal 48.
    """
    a = DenseMatrix.from_array([[1, 2, 3, 4], [5, 6, 7, 8]])
    w_dense = DenseMatrix.from_array([[1, 0], [0, 2], [-1, 0], [0, 3]])
    w = pack(w_dense, tiny_cfg.pattern)
    return tiny_cfg, a, w_dense, w


def random_inputs(rng: np.random.Generator, rows: int, k: int, width: int = 8) -> DenseMatrix:
    lo = -(1 << width - 1)
    hi = (1 << width - 1) - 1
    return DenseMatrix(rows, k, rng.integers(lo, hi + 1, size=(rows, k)))


def random_weights(rng: np.random.Generator, k: int, cols: int, pattern: SparsityPattern,
                   width: int = 8):
    """Pruned weights with |w| <= 2^(width-1) - 1, inside the overflow envelope."""
    hi = (1 << width - 1) - 1
    dense = DenseMatrix(k, cols, rng.integers(-hi, hi + 1, size=(k, cols)))
    return prune_magnitude(dense, pattern)
