"""Tests for src/simulation/parallel.py."""
from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from src.errors import DomainError
from src.logging_config import configure_logging
from src.simulation.parallel import (
    BIT_STREAM,
    MOLECULE_STREAM,
    resolve_workers,
    run_partitioned,
    split_range,
    stack_or_empty,
    substream,
)


class TestSubstream:
    def test_same_key_same_stream(self):
        assert substream(5, MOLECULE_STREAM, 3).random(4).tolist() == substream(5, MOLECULE_STREAM, 3).random(4).tolist()

    def test_keys_are_independent(self):
        a = substream(5, MOLECULE_STREAM, 0).random(4).tolist()
        b = substream(5, MOLECULE_STREAM, 1).random(4).tolist()
        c = substream(5, BIT_STREAM).random(4).tolist()
        assert a != b
        assert a != c

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            substream(-1, 0)


def _worker_root_level(_):
    return logging.getLogger().level


class TestRunPartitioned:
    def test_order_preserved_in_pool(self):
        tasks = list(range(12))
        assert run_partitioned(math.factorial, tasks, workers=3) == [math.factorial(n) for n in tasks]

    def test_serial(self):
        assert run_partitioned(abs, [-2, 3], workers=1) == [2, 3]

    def test_workers_use_parent_logging(self):
        configure_logging("WARNING")
        assert run_partitioned(_worker_root_level, [0, 1, 2], workers=2) == [logging.WARNING] * 3

    def test_bad_worker_count(self):
        with pytest.raises(DomainError):
            resolve_workers(0)


class TestSplitRange:
    def test_blocks(self):
        assert split_range(10, 4) == [(0, 4), (4, 8), (8, 10)]
        assert split_range(0, 4) == []

    def test_bad_block(self):
        with pytest.raises(DomainError):
            split_range(10, 0)


def test_stack_or_empty():
    assert stack_or_empty([], np.int64).dtype == np.int64
    assert stack_or_empty([np.array([1]), np.array([2, 3])], np.int64).tolist() == [1, 2, 3]
