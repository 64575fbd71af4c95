import math

import pytest
from pydantic import ValidationError

import src.config as config_module
from src.config import (
    ExperimentConfig,
    Settings,
    apply_overrides,
    degrees_to_alpha,
    dump_experiment_config,
    load_experiment_config,
    resolve_config_path,
)
from src.errors import DomainError


@pytest.fixture
def fresh_settings(monkeypatch):
    """Drop the cached Settings so env changes take effect."""
    monkeypatch.setattr(config_module, "_settings", None)


class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("LOG_LEVEL", "WORKERS", "MAX_TAPS", "PCAR_CONFIG_DIR"):
            monkeypatch.delenv(name, raising=False)
        s = Settings(_env_file=None)
        assert s.LOG_LEVEL == "INFO"
        assert s.LOG_FORMAT == "json"
        assert s.WORKERS == 1
        assert s.CHUNK_MOLECULES == 4096
        assert s.BER_BLOCK_BITS == 65536
        assert s.MAX_TAPS == 200

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("WORKERS", "4")
        monkeypatch.setenv("LOG_LEVEL", "DEBUG")
        s = Settings(_env_file=None)
        assert s.WORKERS == 4
        assert s.LOG_LEVEL == "DEBUG"

    def test_get_settings_cached(self, fresh_settings, monkeypatch):
        monkeypatch.setenv("MAX_TAPS", "50")
        first = config_module.get_settings()
        assert first.MAX_TAPS == 50
        assert config_module.get_settings() is first

    def test_safe_config_is_plain(self):
        dumped = Settings(_env_file=None).safe_config()
        assert isinstance(dumped, dict)
        assert "WORKERS" in dumped

    def test_relative_config_dir_anchored_at_repo(self, monkeypatch):
        monkeypatch.setenv("PCAR_CONFIG_DIR", "config")
        s = Settings(_env_file=None)
        assert s.config_dir.is_absolute()
        assert s.config_dir.name == "config"


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert (cfg.geometry.r0, cfg.geometry.rr, cfg.geometry.D) == (10.0, 5.0, 80.0)
        assert cfg.timing.t_s == 0.15
        assert cfg.timing.memory_length is None
        assert cfg.link.n1 == 100
        assert cfg.link.n_bits == 1_000_000
        assert cfg.output.format == "csv"
        assert len(cfg.timing.times) == 20

    def test_shipped_yaml_matches_defaults(self, monkeypatch):
        monkeypatch.delenv("PCAR_CONFIG_DIR", raising=False)
        path = resolve_config_path(None, Settings(_env_file=None))
        assert path is not None
        assert load_experiment_config(path) == ExperimentConfig()

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"geometry": {"radius": 5.0}})

    def test_receiver_larger_than_distance_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"geometry": {"r0": 5.0, "rr": 5.0}})

    def test_angles_in_range(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"region": {"alphas_deg": [190.0]}})

    def test_m_values_above_n0(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"link": {"n0": 20, "m_values": [20, 40]}})

    def test_region_alphas_in_radians(self):
        cfg = ExperimentConfig.model_validate({"region": {"alphas_deg": [90.0, 180.0]}})
        assert cfg.region.alphas == [pytest.approx(math.pi / 2), math.pi]

    def test_degrees_to_alpha_exact_pi(self):
        assert degrees_to_alpha(180.0) == math.pi
        assert degrees_to_alpha(45.0) == pytest.approx(math.pi / 4)

    def test_round_trip(self, tmp_path):
        cfg = ExperimentConfig.model_validate({"timing": {"t_s": 0.2}, "link": {"threshold": 12}})
        path = tmp_path / "cfg.yaml"
        path.write_text(dump_experiment_config(cfg), encoding="utf-8")
        assert load_experiment_config(path) == cfg

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_experiment_config(path) == ExperimentConfig()


class TestSimConfigFallback:
    def test_explicit_t_max_wins(self):
        cfg = ExperimentConfig.model_validate({"simulation": {"t_max": 3.0}})
        assert cfg.sim_config(horizon=10.0, chunk_molecules=100).t_max == 3.0

    def test_horizon_then_symbol_multiple(self):
        cfg = ExperimentConfig()
        assert cfg.sim_config(horizon=2.0, chunk_molecules=100).t_max == 2.0
        assert cfg.sim_config(chunk_molecules=100).t_max == pytest.approx(15.0)


class TestOverrides:
    def test_nested_values_parsed_as_yaml(self):
        data = apply_overrides({}, ["geometry.r0=12", "region.alphas_deg=[30, 60]", "output.path=null"])
        assert data == {"geometry": {"r0": 12}, "region": {"alphas_deg": [30, 60]}, "output": {"path": None}}

    def test_override_beats_file(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("geometry:\n  r0: 12.0\n", encoding="utf-8")
        cfg = load_experiment_config(path, ["geometry.r0=14.0"])
        assert cfg.geometry.r0 == 14.0

    def test_missing_equals(self):
        with pytest.raises(DomainError):
            apply_overrides({}, ["geometry.r0"])

    def test_scalar_is_not_a_block(self):
        with pytest.raises(DomainError):
            apply_overrides({"geometry": 3}, ["geometry.r0=1"])


class TestResolveConfigPath:
    def test_bare_name_uses_config_dir(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("PCAR_CONFIG_DIR", str(tmp_path / "configs"))
        s = Settings(_env_file=None)
        assert resolve_config_path("exp.yaml", s) == tmp_path / "configs" / "exp.yaml"

    def test_no_default_present(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PCAR_CONFIG_DIR", str(tmp_path))
        assert resolve_config_path(None, Settings(_env_file=None)) is None

    def test_explicit_path_kept(self, tmp_path):
        path = tmp_path / "x.yaml"
        assert resolve_config_path(str(path), Settings(_env_file=None)) == path
