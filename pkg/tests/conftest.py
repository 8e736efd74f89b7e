"""
Shared fixtures: small potentials and mode sets used across the suite
"""
import logging

import pytest

from src.core.config import reset_settings
from src.lattice import ModeSet
from src.potential import PotentialSpec


@pytest.fixture(autouse=True)
def fresh_settings():
    """The CLI overrides the settings singleton; start every test from the environment"""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture(autouse=True)
def restore_root_logger():
    """configure_logging replaces the root handlers; put pytest's back afterwards"""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def nearest_neighbour_spec() -> PotentialSpec:
    """d=1, supp v̂ = {±2π}, v̂(±2π) = v̂(0) = 1"""
    return PotentialSpec.tabulated(1.0, {(1,): 1.0})


@pytest.fixture
def closed_modes() -> ModeSet:
    """{±2π, ±4π}: the support together with all pairwise sums"""
    return ModeSet.explicit(1, [[1], [2]])


@pytest.fixture
def gaussian_spec() -> PotentialSpec:
    return PotentialSpec.gaussian(g=1.0, s=6.0)
