"""Shared fixtures for the test suite."""

import os

import numpy as np
import pytest

from cmcs3 import families, immersion


def _seed():
    return int(os.environ.get("CMCS3_SEED", "20260823"))


@pytest.fixture()
def rng():
    return np.random.default_rng(_seed())


@pytest.fixture(scope="session")
def flat_pi4():
    """Flat initial value and marked points at t0 = pi/4 (Clifford)."""
    return families.flat_xi()


@pytest.fixture(scope="session")
def flat_pi6():
    return families.flat_xi(np.pi / 6)


@pytest.fixture(scope="session")
def delaunay_params():
    return families.DelaunayParams(0.3, 0.5)


@pytest.fixture(scope="session")
def delaunay_xi(delaunay_params):
    return families.delaunay_xi(delaunay_params)


@pytest.fixture(scope="session")
def minimal_marked():
    return immersion.MarkedPoints(1j, -1j)


@pytest.fixture(scope="session")
def revolution_quarter():
    data, b2 = families.revolution_family(families.RevolutionParams(0.0, 0.25))
    return data
