"""Shared fixtures: expensive pipeline builds are session-scoped."""

from __future__ import annotations

import numpy as np
import pytest

from solsurf.numerics import Grid2
from solsurf.solutions import kink_symmetry, sg_lax_kink
from solsurf.soliton import sg_surface


@pytest.fixture(scope="session")
def kink_surface_401():
    grid = Grid2.square(4.0, 401)
    data = sg_lax_kink(grid, lam=1.0)
    phi = kink_symmetry(grid, "theta_v")
    return data, phi, sg_surface(data, phi)


@pytest.fixture(scope="session")
def kink_surface_801():
    grid = Grid2.square(4.0, 801)
    data = sg_lax_kink(grid, lam=1.0)
    phi = kink_symmetry(grid, "theta_v")
    return data, phi, sg_surface(data, phi)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
