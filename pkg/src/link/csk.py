"""Binary CSK (on-off by default) over the tap channel.

Each emission of ``amount`` molecules is thinned independently by every
tap: the count in slot k is sum_j Binomial(amount_{k-j+1}, p_j) over the
L taps. Mass beyond the last tap (``TapVector.tail_mass``) is reported but
never sampled. The receiver decides 1 when the count reaches the threshold.
"""
from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.stats import beta as beta_dist

from src.errors import DomainError
from src.models import BerResult, LinkConfig
from src.simulation.parallel import (
    BIT_STREAM,
    COUNT_STREAM,
    run_partitioned,
    split_range,
    substream,
)

log = structlog.get_logger()


def _block_bits(block_bits: Optional[int]) -> int:
    if block_bits is None:
        from src.config import get_settings

        block_bits = get_settings().BER_BLOCK_BITS
    if block_bits < 1:
        raise DomainError("block_bits must be >= 1")
    return block_bits


def detect(count: Union[int, np.ndarray], threshold: int) -> Union[int, np.ndarray]:
    """1 if count >= threshold else 0 (elementwise for arrays)."""
    if np.ndim(count) == 0:
        return int(count >= threshold)
    return (np.asarray(count) >= threshold).astype(np.int8)


def received_count(bits: Sequence[int], k: int, cfg: LinkConfig, rng: np.random.Generator) -> int:
    """Molecules counted in slot k (1-based) given the emitted bit sequence."""
    if not 1 <= k <= len(bits):
        raise DomainError(f"k must lie in [1, {len(bits)}], got {k}")
    probs = cfg.taps.taps
    total = 0
    for j in range(1, min(k, len(probs)) + 1):
        amount = cfg.n1 if bits[k - j] else cfg.n0
        total += int(rng.binomial(amount, probs[j - 1]))
    return total


def draw_bits(cfg: LinkConfig) -> np.ndarray:
    """i.i.d. bits with P(1) = prior1, as a bool array."""
    rng = substream(cfg.seed, BIT_STREAM)
    return rng.random(cfg.n_bits) < cfg.prior1


def _count_block(task: Tuple[np.ndarray, int, Tuple[float, ...], int, int]) -> np.ndarray:
    window, lookback, probs, seed, block_index = task
    rng = substream(seed, COUNT_STREAM, block_index)
    memory = len(probs)
    # left-pad so every block sees exactly memory - 1 earlier emissions
    padded = np.concatenate([np.zeros(memory - 1 - lookback, dtype=np.int64), window])
    n = window.size - lookback
    counts = np.zeros(n, dtype=np.int64)
    for j, p in enumerate(probs):
        start = memory - 1 - j
        counts += rng.binomial(padded[start:start + n], p)
    return counts


def simulate_counts(
    cfg: LinkConfig,
    bits: np.ndarray,
    workers: Optional[int] = None,
    block_bits: Optional[int] = None,
) -> np.ndarray:
    """Received counts for every slot, computed in fixed-size bit blocks."""
    amounts = np.where(bits, cfg.n1, cfg.n0).astype(np.int64)
    probs = tuple(cfg.taps.taps)
    memory = len(probs)
    tasks = []
    for index, (start, stop) in enumerate(split_range(amounts.size, _block_bits(block_bits))):
        first = max(0, start - (memory - 1))
        tasks.append((amounts[first:stop], start - first, probs, cfg.seed, index))
    blocks = run_partitioned(_count_block, tasks, workers)
    return np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)


def error_curve(bits: np.ndarray, counts: np.ndarray, n1: int) -> np.ndarray:
    """Decision errors for every threshold tau = 0..n1."""
    ones = counts[bits]
    zeros = counts[~bits]
    top = n1 + 1
    below1 = np.concatenate([[0], np.cumsum(np.bincount(np.minimum(ones, top), minlength=top + 1))])
    below0 = np.concatenate([[0], np.cumsum(np.bincount(np.minimum(zeros, top), minlength=top + 1))])
    taus = np.arange(n1 + 1)
    # missed ones (count < tau) + false alarms (count >= tau)
    return below1[taus] + (zeros.size - below0[taus])


def _best_threshold(bits: np.ndarray, counts: np.ndarray, n1: int) -> int:
    # argmin returns the first minimum, i.e. the smallest tau among ties
    return int(np.argmin(error_curve(bits, counts, n1)))


def _link_sample(cfg: LinkConfig, workers: Optional[int], block_bits: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    bits = draw_bits(cfg)
    return bits, simulate_counts(cfg, bits, workers=workers, block_bits=block_bits)


def optimize_threshold(cfg: LinkConfig, workers: Optional[int] = None, block_bits: Optional[int] = None) -> int:
    """Threshold in [0, n1] minimising Monte Carlo errors; ``cfg.threshold`` is ignored."""
    bits, counts = _link_sample(cfg, workers, block_bits)
    tau = _best_threshold(bits, counts, cfg.n1)
    log.info("threshold_optimized", threshold=tau, n1=cfg.n1, n_bits=cfg.n_bits)
    return tau


def clopper_pearson_halfwidth(errors: int, bits: int, level: float = 0.95) -> float:
    """Half-width of the exact binomial confidence interval for errors / bits."""
    if bits < 1 or not 0 <= errors <= bits:
        raise DomainError(f"need 0 <= errors <= bits and bits >= 1, got {errors}/{bits}")
    tail = (1.0 - level) / 2.0
    low = 0.0 if errors == 0 else float(beta_dist.ppf(tail, errors, bits - errors + 1))
    high = 1.0 if errors == bits else float(beta_dist.ppf(1.0 - tail, errors + 1, bits - errors))
    return (high - low) / 2.0


def ber_monte_carlo(cfg: LinkConfig, workers: Optional[int] = None, block_bits: Optional[int] = None) -> BerResult:
    """Bit error rate of the link.

    With ``cfg.threshold`` unset the threshold is optimised on the same count
    sample before errors are counted.
    """
    bits, counts = _link_sample(cfg, workers, block_bits)
    if cfg.threshold is None:
        tau = _best_threshold(bits, counts, cfg.n1)
        log.info("threshold_optimized", threshold=tau, n1=cfg.n1, n_bits=cfg.n_bits)
    else:
        tau = cfg.threshold
    decisions = detect(counts, tau)
    errors = int(np.count_nonzero(decisions != bits.astype(np.int8)))
    return BerResult(
        ber=errors / cfg.n_bits,
        errors=errors,
        bits=cfg.n_bits,
        confidence_halfwidth_95=clopper_pearson_halfwidth(errors, cfg.n_bits),
        threshold=tau,
    )


def expected_count(bits: Sequence[int], k: int, cfg: LinkConfig) -> float:
    """Mean of received_count for slot k (1-based)."""
    probs = cfg.taps.taps
    return float(sum((cfg.n1 if bits[k - j] else cfg.n0) * probs[j - 1] for j in range(1, min(k, len(probs)) + 1)))
