import math

import numpy as np
import pytest

import fuzzboltz as fb
from fuzzboltz.grid import DistributionFunction


@pytest.fixture(scope="session")
def tiny_grid():
    # Nx * Nv^2 * Nomega = 2*64*8 = 1024, well under the oracle cap
    return fb.make_grid(1, 1.0, 2, 6.0, 8, 8)


@pytest.fixture(scope="session")
def small_grid():
    return fb.make_grid(1, 1.0, 8, 6.0, 16, 8)


@pytest.fixture(scope="session")
def default_grid():
    return fb.make_grid(1, 1.0, 32, 6.0, 32, 16)


@pytest.fixture(scope="session")
def maxwell_kernel():
    # normalised Maxwell-molecule kernel: A == 1
    return fb.make_kernel(0.0, "constant", 1.0 / (2.0 * math.pi))


@pytest.fixture(scope="session")
def soft_kernel():
    return fb.make_kernel(0.5, "cosine_squared", 0.1)


def maxwellian_on(grid, rho=1.0, T=1.0, ux=0.0, uy=0.0):
    w = (grid.v_nodes[:, 0] - ux) ** 2 + (grid.v_nodes[:, 1] - uy) ** 2
    m = rho / (2.0 * math.pi * T) * np.exp(-w / (2.0 * T))
    return DistributionFunction(grid, np.tile(m, (grid.n_xcells, 1)))


def random_f(grid, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return DistributionFunction(grid, scale * rng.random((grid.n_xcells, grid.n_vcells)))
