"""Brownian particle simulator for the absorbing spherical receiver.

The receiver centre is the origin and the transmitter sits at (r0, 0, 0).
Every molecule takes Gaussian steps with per-axis variance 2 D dt and is
absorbed the first time its step segment touches the sphere. Molecules are
processed in fixed chunks, each with its own RNG substream.
"""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from src.errors import DomainError, NoIntersectionError, SimulationError
from src.models import (
    ChannelGeometry,
    EmpiricalCdf,
    HitRecord,
    SimConfig,
    TapVector,
)
from src.simulation.parallel import MOLECULE_STREAM, run_partitioned, stack_or_empty, substream

log = structlog.get_logger()

RECORD_COLUMNS = ("molecule_id", "hit_time_s", "hit_angle_rad")


# ---------------------------------------------------------------------------
# Segment / sphere intersection
# ---------------------------------------------------------------------------


def _entry_fraction(start: np.ndarray, step: np.ndarray, rr: float) -> np.ndarray:
    """Fraction lambda of each step where the segment first meets the sphere.

    Rows that never touch the sphere within [0, 1] get +inf. Solves
    |start + lambda step|^2 = rr^2 using 2c / (-b + sqrt(disc)) for the near
    root, which does not cancel when the start point is close to the surface.
    """
    a = np.einsum("ij,ij->i", step, step)
    b = 2.0 * np.einsum("ij,ij->i", start, step)
    c = np.einsum("ij,ij->i", start, start) - rr * rr
    disc = b * b - 4.0 * a * c
    approaching = (b < 0.0) & (disc >= 0.0) & (a > 0.0)
    lam = np.full(a.shape, np.inf)
    denom = -b[approaching] + np.sqrt(disc[approaching])
    lam[approaching] = 2.0 * c[approaching] / denom
    lam[(lam < 0.0) | (lam > 1.0)] = np.inf
    return lam


def crossing_point(p_prev: Sequence[float], p_next: Sequence[float], rr: float) -> Tuple[Tuple[float, float, float], float]:
    """First point where the segment p_prev -> p_next meets the sphere of radius rr.

    Returns (point, lambda) with lambda in [0, 1] the fraction of the step.
    """
    start = np.asarray(p_prev, dtype=float).reshape(1, 3)
    end = np.asarray(p_next, dtype=float).reshape(1, 3)
    if not (np.isfinite(start).all() and np.isfinite(end).all()):
        raise DomainError("segment endpoints must be finite")
    if not rr > 0:
        raise DomainError("rr must be positive")
    lam = _entry_fraction(start, end - start, rr)[0]
    if not math.isfinite(lam):
        raise NoIntersectionError(f"segment {tuple(start[0])} -> {tuple(end[0])} does not meet sphere rr={rr}")
    point = start[0] + lam * (end[0] - start[0])
    return (float(point[0]), float(point[1]), float(point[2])), float(lam)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _simulate_chunk(task: Tuple[SimConfig, int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    config, chunk_index = task
    geom = config.geometry
    first = chunk_index * config.chunk_molecules
    count = min(config.chunk_molecules, config.n_molecules - first)
    rng = substream(config.seed, MOLECULE_STREAM, chunk_index)

    positions = np.tile(np.array([geom.r0, 0.0, 0.0]), (count, 1))
    ids = np.arange(first, first + count, dtype=np.int64)
    sigma = config.step_sigma

    hit_ids: List[np.ndarray] = []
    hit_times: List[np.ndarray] = []
    hit_angles: List[np.ndarray] = []

    for k in range(config.n_steps):
        if ids.size == 0:
            break
        step = rng.standard_normal(positions.shape) * sigma
        if not np.isfinite(step).all() or not np.isfinite(positions).all():
            raise SimulationError(f"non-finite molecule state in chunk {chunk_index} at step {k}")
        lam = _entry_fraction(positions, step, geom.rr)
        hit = np.isfinite(lam)
        if hit.any():
            times = (k + lam[hit]) * config.dt
            inside = times <= config.t_max
            points = positions[hit] + lam[hit, None] * step[hit]
            cos_theta = np.clip(points[:, 0] / geom.rr, -1.0, 1.0)
            hit_ids.append(ids[hit][inside])
            hit_times.append(times[inside])
            hit_angles.append(np.arccos(cos_theta)[inside])
            keep = ~hit
            positions = positions[keep] + step[keep]
            ids = ids[keep]
        else:
            positions += step

    hits = stack_or_empty(hit_ids, np.int64)
    log.debug("simulation_chunk_done", chunk=chunk_index, molecules=count, hits=int(hits.size))
    return (
        hits,
        stack_or_empty(hit_times, float),
        stack_or_empty(hit_angles, float),
    )


def simulate(config: SimConfig, workers: Optional[int] = None) -> List[HitRecord]:
    """Release ``n_molecules`` at the transmitter and record first hits.

    Molecules still free at ``t_max`` produce no record. The output is a pure
    function of ``config``; ``workers`` only changes how chunks are scheduled.
    """
    log.info(
        "simulation_start",
        n_molecules=config.n_molecules,
        dt=config.dt,
        t_max=config.t_max,
        chunks=config.n_chunks,
        seed=config.seed,
    )
    tasks = [(config, i) for i in range(config.n_chunks)]
    chunks = run_partitioned(_simulate_chunk, tasks, workers)

    records: List[HitRecord] = []
    for ids, times, angles in chunks:
        order = np.argsort(ids, kind="stable")
        records.extend(
            HitRecord(molecule_id=int(i), hit_time=float(t), hit_angle=float(a))
            for i, t, a in zip(ids[order], times[order], angles[order])
        )
    log.info("simulation_done", absorbed=len(records), fraction=len(records) / config.n_molecules)
    return records


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _record_arrays(records: Sequence[HitRecord]) -> Tuple[np.ndarray, np.ndarray]:
    times = np.fromiter((r.hit_time for r in records), dtype=float, count=len(records))
    angles = np.fromiter((r.hit_angle for r in records), dtype=float, count=len(records))
    return times, angles


def empirical_cdf(
    records: Sequence[HitRecord],
    n_molecules: int,
    alphas: Sequence[float],
    times: Sequence[float],
) -> EmpiricalCdf:
    """Fraction of released molecules hit with angle <= alpha by time t."""
    if n_molecules < 1:
        raise DomainError("n_molecules must be >= 1")
    hit_times, hit_angles = _record_arrays(records)
    query = np.asarray(times, dtype=float)
    values: List[List[float]] = []
    for alpha in alphas:
        counted = np.sort(hit_times[hit_angles <= alpha])
        cumulative = np.searchsorted(counted, query, side="right") / n_molecules
        values.append([float(v) for v in cumulative])
    return EmpiricalCdf(
        alphas=[float(a) for a in alphas],
        times=[float(t) for t in times],
        values=values,
        n_molecules=n_molecules,
    )


def empirical_taps(
    records: Sequence[HitRecord],
    n_molecules: int,
    geometry: ChannelGeometry,
    alpha: float,
    t_s: float,
    L: int,
) -> TapVector:
    """Per-slot counted fractions ((n-1) t_s, n t_s] from simulated hits."""
    if L < 1:
        raise DomainError("L must be >= 1")
    hit_times, hit_angles = _record_arrays(records)
    counted = hit_times[hit_angles <= alpha]
    edges = np.arange(L + 1, dtype=float) * t_s
    # right-closed slots; a hit exactly at n t_s belongs to slot n
    slot = np.ceil(counted / t_s).astype(np.int64)
    in_range = (slot >= 1) & (slot <= L)
    counts = np.bincount(slot[in_range], minlength=L + 1)[1:]
    fractions = tuple(float(c) / n_molecules for c in counts)
    late = int(np.count_nonzero(counted > edges[-1]))
    return TapVector(
        taps=fractions,
        symbol_duration=t_s,
        alpha=alpha,
        geometry=geometry,
        tail_mass=late / n_molecules,
    )


def records_table_rows(records: Sequence[HitRecord]) -> List[Tuple[int, float, float]]:
    return [(r.molecule_id, r.hit_time, r.hit_angle) for r in records]
