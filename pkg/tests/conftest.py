import logging
import math

import pytest
import structlog

import src.logging_config as logging_config
from src.models import ChannelGeometry, LinkConfig, TapVector


@pytest.fixture(autouse=True)
def _restore_logging():
    """Undo handler changes made by configure_logging() inside a test."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    active = logging_config.logging_args()
    yield
    logging_config._active = active
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)
    structlog.reset_defaults()


@pytest.fixture
def geometry():
    """Factory for ChannelGeometry; defaults r0=10, rr=5, D=80."""
    def _make(**overrides):
        defaults = {"r0": 10.0, "rr": 5.0, "D": 80.0}
        defaults.update(overrides)
        return ChannelGeometry(**defaults)
    return _make


@pytest.fixture
def reference_geometry(geometry):
    """The (10, 5, 80) geometry used by most reference values."""
    return geometry()


@pytest.fixture
def link_config(reference_geometry):
    """Factory for LinkConfig over an explicit tap vector."""
    def _make(taps=(0.3, 0.1), tail_mass=0.0, alpha=math.pi, t_s=0.15, **overrides):
        vector = TapVector(
            taps=tuple(taps),
            symbol_duration=t_s,
            alpha=alpha,
            geometry=reference_geometry,
            tail_mass=tail_mass,
        )
        defaults = {"n1": 100, "n0": 0, "threshold": None, "n_bits": 20_000, "seed": 7}
        defaults.update(overrides)
        return LinkConfig(taps=vector, **defaults)
    return _make
