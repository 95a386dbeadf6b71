"""Shared light fixtures: one small lagoon discretization reused across files."""

import pytest

from paralic import (
    GeometryParams,
    PhysicalParams,
    TransportConfig,
    build_chamber_meshes,
    build_lagoon,
    reference_run,
)


@pytest.fixture(scope="session")
def geom():
    """Default-parameter lagoon at the widest studied channel (delta = 0.2)."""
    return build_lagoon(GeometryParams(delta=0.2))


@pytest.fixture(scope="session")
def cm(geom):
    """Coarse chamber meshes of the default lagoon (h = 0.05, no channel strip)."""
    return build_chamber_meshes(geom, target_h=0.05)


@pytest.fixture(scope="session")
def phys():
    return PhysicalParams(theta0=1.0, depth=1.0, nu=0.01, horizon=5.0)


@pytest.fixture(scope="session")
def tcfg_small():
    """Short transport run for coupling tests (10 implicit Euler steps)."""
    return TransportConfig(horizon=5.0, nsteps=10, nu=0.01)


@pytest.fixture(scope="session")
def ref_small(cm, phys, tcfg_small):
    return reference_run(cm, phys, tcfg_small)
