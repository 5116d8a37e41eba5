"""Shared fixtures: the Lorenz setup plus cached certificates and orbits.

The bound certificates and shooting-refined orbits are expensive enough to
compute once per session; everything downstream (validation, traces,
occupancy, acceptance) reuses them.
"""

from __future__ import annotations

import numpy as np
import pytest

from ergobound.dynamics import close_return_seeds, find_periodic_orbit, lorenz_section
from ergobound.polyalg import Polynomial, lorenz_system
from ergobound.sosbuild import solve_bound


@pytest.fixture(scope="session")
def lorenz():
    return lorenz_system()


@pytest.fixture(scope="session")
def z4(lorenz):
    return Polynomial.monomial((0, 0, 4))


@pytest.fixture(scope="session")
def section():
    return lorenz_section()


@pytest.fixture(scope="session")
def bound_pipeline(lorenz, z4):
    """degree -> (program, solution, certificate), computed on demand."""
    cache = {}

    def run(degree: int):
        if degree not in cache:
            cache[degree] = solve_bound(lorenz, z4, degree)
        return cache[degree]

    return run


@pytest.fixture(scope="session")
def cert4(bound_pipeline):
    return bound_pipeline(4)[2]


@pytest.fixture(scope="session")
def cert6(bound_pipeline):
    return bound_pipeline(6)[2]


@pytest.fixture(scope="session")
def cert8(bound_pipeline):
    return bound_pipeline(8)[2]


@pytest.fixture(scope="session")
def ab_seeds(lorenz, section):
    return close_return_seeds(lorenz, section, "AB", 300.0)


@pytest.fixture(scope="session")
def orbit_ab(lorenz, section, ab_seeds):
    assert ab_seeds, "no close-return seeds for the shortest orbit"
    return find_periodic_orbit(lorenz, section, "AB", ab_seeds[0].state)


@pytest.fixture(scope="session")
def orbit_aababb(lorenz, section):
    seeds = close_return_seeds(lorenz, section, "AABABB", 1500.0)
    assert seeds, "no close-return seeds for the AABABB orbit"
    last = None
    for seed in seeds[:4]:
        try:
            return find_periodic_orbit(lorenz, section, "AABABB", seed.state)
        except Exception as exc:  # try the next-best seed
            last = exc
    raise AssertionError(f"AABABB shooting failed for all seeds: {last}")
