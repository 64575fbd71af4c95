from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.errors import DomainError
from src.models import ChannelGeometry, LinkParams, SimConfig

log = structlog.get_logger()

_REPO_ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG_NAME = "default.yaml"


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""  # empty -> stderr only
    LOG_FORMAT: str = "json"  # "json" or "console"

    # Experiment configs
    PCAR_CONFIG_DIR: str = "config"

    # Execution
    WORKERS: int = 1  # process-pool width for simulation and sweeps
    CHUNK_MOLECULES: int = 4096  # molecules per RNG substream
    BER_BLOCK_BITS: int = 65536  # symbols per RNG substream
    MAX_TAPS: int = 200  # cap on channel memory length

    @property
    def config_dir(self) -> Path:
        path = Path(self.PCAR_CONFIG_DIR)
        return path if path.is_absolute() else _REPO_ROOT / path

    def safe_config(self) -> dict:
        """Settings as a plain dict for run metadata."""
        return json.loads(self.model_dump_json())

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")


_settings: Settings | None = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


def degrees_to_alpha(value: float) -> float:
    """Degrees to radians with 180 mapped to pi exactly."""
    return math.pi if value == 180.0 else math.radians(value)


def _check_degrees(values: List[float]) -> List[float]:
    for v in values:
        if not 0.0 <= v <= 180.0:
            raise ValueError(f"angle {v} deg outside [0, 180]")
    return values


class GeometryBlock(_Block):
    r0: float = Field(10.0, gt=0, description="um, transmitter to receiver centre")
    rr: float = Field(5.0, gt=0, description="um, receiver radius")
    D: float = Field(80.0, gt=0, description="um^2/s")

    @model_validator(mode="after")
    def _r0_beyond_surface(self) -> "GeometryBlock":
        if self.r0 <= self.rr:
            raise ValueError(f"r0 ({self.r0}) must exceed rr ({self.rr})")
        return self

    def to_geometry(self) -> ChannelGeometry:
        return ChannelGeometry(r0=self.r0, rr=self.rr, D=self.D)


class RegionBlock(_Block):
    alphas_deg: List[float] = Field(default_factory=lambda: [30.0, 45.0, 60.0, 90.0, 180.0], min_length=1)
    include_alpha_star: bool = True

    @field_validator("alphas_deg")
    @classmethod
    def _angles_in_range(cls, values: List[float]) -> List[float]:
        return _check_degrees(values)

    @property
    def alphas(self) -> List[float]:
        return [degrees_to_alpha(a) for a in self.alphas_deg]


class TimingBlock(_Block):
    t_s: float = Field(0.15, gt=0, description="symbol duration, s")
    memory_length: Optional[int] = Field(None, ge=1, description="None -> truncation rule")
    truncation_tol: float = Field(1e-4, gt=0, lt=1)
    times: List[float] = Field(
        default_factory=lambda: [0.5 * i for i in range(1, 21)],
        min_length=1,
        description="CDF time grid, s",
    )

    @field_validator("times")
    @classmethod
    def _positive_times(cls, values: List[float]) -> List[float]:
        if any(not (t > 0 and math.isfinite(t)) for t in values):
            raise ValueError("times must be positive and finite")
        return values


class SimulationBlock(_Block):
    dt: float = Field(1e-4, gt=0)
    t_max: Optional[float] = Field(None, gt=0, description="None -> command horizon or 100 t_s")
    n_molecules: int = Field(100_000, ge=1)
    seed: int = Field(1, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _horizon_covers_step(self) -> "SimulationBlock":
        if self.t_max is not None and self.t_max < self.dt:
            raise ValueError(f"t_max ({self.t_max}) must be >= dt ({self.dt})")
        return self


class LinkBlock(_Block):
    n1: int = Field(100, ge=1)
    n0: int = Field(0, ge=0)
    threshold: Optional[int] = Field(None, ge=0, description="None -> optimise per point")
    n_bits: int = Field(1_000_000, ge=1)
    prior1: float = Field(0.5, gt=0, lt=1)
    seed: int = Field(7, ge=0, lt=2**64)
    m_values: List[int] = Field(default_factory=lambda: [20, 40, 60, 80, 100], min_length=1)

    @model_validator(mode="after")
    def _levels_ordered(self) -> "LinkBlock":
        if self.n1 <= self.n0:
            raise ValueError(f"n1 ({self.n1}) must exceed n0 ({self.n0})")
        if any(m <= self.n0 for m in self.m_values):
            raise ValueError("every m_values entry must exceed n0")
        return self

    def to_params(self) -> LinkParams:
        return LinkParams(
            n1=self.n1,
            n0=self.n0,
            threshold=self.threshold,
            n_bits=self.n_bits,
            seed=self.seed,
            prior1=self.prior1,
        )


class SweepBlock(_Block):
    vary: Literal["alpha", "m"] = "alpha"
    ber_alpha_step_deg: float = Field(5.0, gt=0, le=180)
    sid_step_deg: float = Field(0.1, gt=0, le=180)
    d_values: List[float] = Field(default_factory=lambda: [3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0], min_length=1)
    peak_alphas_deg: List[float] = Field(default_factory=lambda: [30.0, 90.0, 180.0], min_length=1)
    angular_r0: List[float] = Field(default_factory=lambda: [10.0, 12.0, 14.0], min_length=1)

    @field_validator("peak_alphas_deg")
    @classmethod
    def _angles_in_range(cls, values: List[float]) -> List[float]:
        return _check_degrees(values)

    @field_validator("d_values", "angular_r0")
    @classmethod
    def _positive_lengths(cls, values: List[float]) -> List[float]:
        if any(not v > 0 for v in values):
            raise ValueError("lengths must be positive")
        return values


class OutputBlock(_Block):
    format: Literal["csv", "json"] = "csv"
    path: Optional[str] = None


class ExperimentConfig(_Block):
    geometry: GeometryBlock = Field(default_factory=GeometryBlock)
    region: RegionBlock = Field(default_factory=RegionBlock)
    timing: TimingBlock = Field(default_factory=TimingBlock)
    simulation: SimulationBlock = Field(default_factory=SimulationBlock)
    link: LinkBlock = Field(default_factory=LinkBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    def sim_config(self, horizon: Optional[float] = None, chunk_molecules: Optional[int] = None) -> SimConfig:
        """Simulator settings; t_max falls back to ``horizon``, then 100 t_s."""
        t_max = self.simulation.t_max
        if t_max is None:
            t_max = horizon if horizon is not None else 100.0 * self.timing.t_s
        return SimConfig(
            geometry=self.geometry.to_geometry(),
            dt=self.simulation.dt,
            t_max=t_max,
            n_molecules=self.simulation.n_molecules,
            seed=self.simulation.seed,
            chunk_molecules=chunk_molecules or get_settings().CHUNK_MOLECULES,
        )


def resolve_config_path(name: Optional[str], settings: Optional[Settings] = None) -> Optional[Path]:
    """Map a ``--config`` value to a file.

    A bare file name is looked up in the settings' config directory; with no
    name the directory's default.yaml is used when present.
    """
    settings = settings or get_settings()
    if name is None:
        candidate = settings.config_dir / DEFAULT_CONFIG_NAME
        return candidate if candidate.exists() else None
    path = Path(name)
    if path.parent == Path(".") and not path.exists():
        return settings.config_dir / path
    return path


def _set_dotted(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise DomainError(f"cannot set {dotted!r}: {key!r} is not a block")
        node = child
    node[keys[-1]] = value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply ``block.field=value`` strings; values are parsed as YAML scalars."""
    for item in overrides:
        if "=" not in item:
            raise DomainError(f"override {item!r} is not of the form block.field=value")
        key, raw = item.split("=", 1)
        _set_dotted(data, key.strip(), yaml.safe_load(raw))
    return data


def load_experiment_config(
    path: Optional[Path] = None,
    overrides: Sequence[str] = (),
) -> ExperimentConfig:
    """Read YAML (if given), apply overrides, validate.

    Raises pydantic.ValidationError, yaml.YAMLError or OSError.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise yaml.YAMLError(f"{path}: top level must be a mapping")
        data = loaded
        log.debug("experiment_config_loaded", path=str(path))
    return ExperimentConfig.model_validate(apply_overrides(data, overrides))


def dump_experiment_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
