"""Shared fixtures: small evolved states reused across test modules."""

import numpy as np
import pytest

from spinchain import (
    ModelSpec,
    TimeGrid,
    coupling_matrix,
    enumerate_sector,
    evolve,
    neel_state,
)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def basis6():
    return enumerate_sector(6, 3)


@pytest.fixture(scope="session")
def basis8():
    return enumerate_sector(8, 4)


def random_sector_state(basis, rng):
    amps = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    amps /= np.linalg.norm(amps)
    return amps


@pytest.fixture(scope="session")
def evolved8(basis8):
    """Half-filling N=8 Neel quench at a mid-window time, alpha=0.6."""
    coupling = coupling_matrix(ModelSpec(8, alpha=0.6))
    grid = TimeGrid(np.array([0.0, 1.7]))
    traj = evolve(coupling, basis8, neel_state(basis8), grid, engine="dense")
    return traj.state_at(1)
