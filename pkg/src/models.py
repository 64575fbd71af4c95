from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.errors import DomainError

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

# Angular modes quoted for the rr = 5 um family of curves (degrees).
REFERENCE_ANGULAR_MODES_DEG: Tuple[float, ...] = (28.6, 34.3, 40.1)


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def _require_angle(name: str, value: float) -> None:
    _require_finite(name, value)
    if not 0.0 <= value <= math.pi:
        raise DomainError(f"{name} must lie in [0, pi], got {value!r}")


# ---------------------------------------------------------------------------
# Numerics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Accuracy:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("abs_tol and rel_tol must be positive")

    def agrees(self, value: float, reference: float) -> bool:
        return abs(value - reference) <= self.abs_tol + self.rel_tol * abs(reference)


# ---------------------------------------------------------------------------
# Channel models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelGeometry:
    r0: float  # um, transmitter to receiver centre
    rr: float  # um, receiver radius
    D: float  # um^2/s

    def __post_init__(self) -> None:
        for name in ("r0", "rr", "D"):
            _require_finite(name, getattr(self, name))
        if self.rr <= 0:
            raise DomainError(f"rr must be positive, got {self.rr}")
        if self.r0 <= self.rr:
            raise DomainError(f"r0 must exceed rr, got r0={self.r0} rr={self.rr}")
        if self.D <= 0:
            raise DomainError(f"D must be positive, got {self.D}")

    @property
    def d(self) -> float:
        """Shortest transmitter-to-surface distance."""
        return self.r0 - self.rr

    @property
    def gamma(self) -> float:
        return self.rr / self.r0

    @classmethod
    def from_distance(cls, d: float, rr: float, D: float) -> "ChannelGeometry":
        return cls(r0=rr + d, rr=rr, D=D)


@dataclass(frozen=True)
class CountingRegion:
    alpha: float  # radians, half-aperture of the cap facing the transmitter

    def __post_init__(self) -> None:
        _require_angle("alpha", self.alpha)

    @property
    def is_full_sphere(self) -> bool:
        return self.alpha == math.pi


@dataclass(frozen=True)
class TapVector:
    taps: Tuple[float, ...]  # p_1 .. p_L
    symbol_duration: float  # seconds
    alpha: float
    geometry: ChannelGeometry
    tail_mass: float = 0.0  # F(alpha, inf) - F(alpha, L * t_s)

    def __post_init__(self) -> None:
        if len(self.taps) < 1:
            raise DomainError("a tap vector needs at least one tap")
        for p in self.taps:
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"tap probability out of [0, 1]: {p}")
        if not (self.symbol_duration > 0):
            raise DomainError("symbol_duration must be positive")
        _require_angle("alpha", self.alpha)
        if not (0.0 <= self.tail_mass <= 1.0):
            raise DomainError(f"tail_mass out of [0, 1]: {self.tail_mass}")

    @property
    def memory_length(self) -> int:
        return len(self.taps)

    @property
    def total(self) -> float:
        return math.fsum(self.taps)


# ---------------------------------------------------------------------------
# Monte Carlo models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    geometry: ChannelGeometry
    dt: float  # seconds
    t_max: float  # seconds
    n_molecules: int
    seed: int
    chunk_molecules: int = 4096  # molecules per RNG substream

    def __post_init__(self) -> None:
        _require_finite("dt", self.dt)
        _require_finite("t_max", self.t_max)
        if self.dt <= 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.t_max < self.dt:
            raise DomainError(f"t_max must be >= dt, got t_max={self.t_max} dt={self.dt}")
        if self.n_molecules < 1:
            raise DomainError("n_molecules must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.chunk_molecules < 1:
            raise DomainError("chunk_molecules must be >= 1")

    @property
    def step_sigma(self) -> float:
        """Per-axis standard deviation of one Brownian step."""
        return math.sqrt(2.0 * self.geometry.D * self.dt)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9))

    @property
    def n_chunks(self) -> int:
        return -(-self.n_molecules // self.chunk_molecules)


@dataclass(frozen=True)
class HitRecord:
    molecule_id: int
    hit_time: float  # seconds
    hit_angle: float  # radians from the receiver-centre -> transmitter axis


@dataclass
class EmpiricalCdf:
    alphas: List[float]
    times: List[float]
    values: List[List[float]]  # values[i][j] for alphas[i], times[j]
    n_molecules: int

    def cell(self, alpha_index: int, time_index: int) -> float:
        return self.values[alpha_index][time_index]


# ---------------------------------------------------------------------------
# Link models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkParams:
    """Everything a link run needs except the taps."""

    n1: int = 100  # molecules for bit-1
    n0: int = 0  # molecules for bit-0
    threshold: Optional[int] = None  # None -> optimise per configuration
    n_bits: int = 1_000_000
    seed: int = 7
    prior1: float = 0.5

    def __post_init__(self) -> None:
        if not (self.n1 > self.n0 >= 0):
            raise DomainError(f"need n1 > n0 >= 0, got n1={self.n1} n0={self.n0}")
        if self.threshold is not None and self.threshold < 0:
            raise DomainError("threshold must be >= 0")
        if self.n_bits < 1:
            raise DomainError("n_bits must be >= 1")
        if not (0.0 < self.prior1 < 1.0):
            raise DomainError("prior1 must lie in (0, 1)")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class LinkConfig:
    taps: TapVector
    n1: int = 100
    n0: int = 0
    threshold: Optional[int] = None
    n_bits: int = 1_000_000
    seed: int = 7
    prior1: float = 0.5

    def __post_init__(self) -> None:
        # LinkParams.__post_init__ carries the invariants.
        _ = self.params

    @property
    def params(self) -> LinkParams:
        return LinkParams(
            n1=self.n1,
            n0=self.n0,
            threshold=self.threshold,
            n_bits=self.n_bits,
            seed=self.seed,
            prior1=self.prior1,
        )

    @classmethod
    def from_params(cls, taps: TapVector, params: LinkParams) -> "LinkConfig":
        return cls(
            taps=taps,
            n1=params.n1,
            n0=params.n0,
            threshold=params.threshold,
            n_bits=params.n_bits,
            seed=params.seed,
            prior1=params.prior1,
        )


@dataclass(frozen=True)
class BerResult:
    ber: float
    errors: int
    bits: int
    confidence_halfwidth_95: float
    threshold: int = 0  # threshold the errors were counted at

    @property
    def confidence_interval(self) -> Tuple[float, float]:
        return (
            max(0.0, self.ber - self.confidence_halfwidth_95),
            min(1.0, self.ber + self.confidence_halfwidth_95),
        )


# ---------------------------------------------------------------------------
# Optimisation models
# ---------------------------------------------------------------------------


@dataclass
class SidCurve:
    alphas: List[float]
    sid_values: List[float]
    argmax_alpha: float


@dataclass(frozen=True)
class AppendixConstants:
    a: float  # D * t_s, um^2
    Y: float  # -2 rr F_hit(t_s) / U(t_s)
    M_const: float  # r0^2 / 2, um^2
    x: float  # r0^2 - 2 r0 rr cos(alpha) + rr^2, um^2


# ---------------------------------------------------------------------------
# Tabular output
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> List[Any]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def extend(self, other: "SweepResult") -> None:
        if other.columns != self.columns:
            raise ValueError("column mismatch")
        self.rows.extend(other.rows)
