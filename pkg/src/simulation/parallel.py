"""Deterministic random substreams and an order-preserving task runner.

Work is split into fixed partitions (molecule chunks, bit blocks, sweep
points) whose RNG is keyed by the partition index, never by the worker that
happens to run it. Results therefore do not depend on the worker count.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np
import structlog
from numpy.random import PCG64, Generator, SeedSequence

from src.errors import DomainError
from src.logging_config import configure_logging, logging_args

log = structlog.get_logger()

T = TypeVar("T")
R = TypeVar("R")

# Stream tags keep independent consumers of one seed apart.
MOLECULE_STREAM = 0
BIT_STREAM = 1
COUNT_STREAM = 2


def substream(seed: int, *key: int) -> Generator:
    """PCG64 generator for the partition identified by ``key`` under ``seed``."""
    entropy = (int(seed), *(int(k) for k in key))
    if any(v < 0 for v in entropy):
        raise DomainError(f"seed and stream keys must be non-negative, got {entropy}")
    return Generator(PCG64(SeedSequence(entropy)))


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        from src.config import get_settings

        workers = get_settings().WORKERS
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    return workers


def run_partitioned(fn: Callable[[T], R], tasks: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """Map ``fn`` over ``tasks`` and return results in task order.

    ``fn`` must be a module-level function so worker processes can import it.
    """
    workers = resolve_workers(workers)
    tasks = list(tasks)
    if workers == 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    log.debug("partitioned_run", tasks=len(tasks), workers=workers, fn=getattr(fn, "__name__", repr(fn)))
    # spawned workers start with structlog unconfigured
    with ProcessPoolExecutor(
        max_workers=min(workers, len(tasks)),
        initializer=configure_logging,
        initargs=logging_args(),
    ) as executor:
        return list(executor.map(fn, tasks))


def split_range(total: int, block: int) -> List[tuple]:
    """Fixed-size [start, stop) blocks covering range(total)."""
    if block < 1:
        raise DomainError("block size must be >= 1")
    return [(start, min(start + block, total)) for start in range(0, total, block)]


def stack_or_empty(arrays: Sequence[np.ndarray], dtype) -> np.ndarray:
    return np.concatenate(arrays) if arrays else np.empty(0, dtype=dtype)
