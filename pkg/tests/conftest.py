import numpy as np
import pytest

import hartreelab as hl

# A kernel whose potential underflows to zero: emulates free evolution while
# keeping every code path intact.
NEAR_ZERO_KERNEL = hl.compact_well(g=1e-300, r0=1.0)


@pytest.fixture(scope="session", autouse=True)
def _fft_workers():
    hl.set_workers(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def grid16():
    return hl.make_grid(16, 16.0)


@pytest.fixture(scope="session")
def grid32():
    return hl.make_grid(32, 16.0)


def random_field(grid, rng, scale=1.0):
    vals = rng.standard_normal((grid.N,) * 3) + 1j * rng.standard_normal((grid.N,) * 3)
    return hl.make_field(grid, scale * vals)


def plane_wave(grid, mode=(1, 0, 0)):
    X, Y, Z = hl.grids.coords(grid)
    k = 2.0 * np.pi * np.array(mode) / grid.L
    vals = np.exp(1j * (k[0] * X + k[1] * Y + k[2] * Z))
    return hl.make_field(grid, vals), float(np.dot(k, k))
