import numpy as np
import pytest

from schrodinger_lab import Density, build_circle_grid, build_interval_grid, ipfp_solve


def smooth_pair(space):
    x = space.coords / space.length
    return (Density(space, 1 + 0.5 * np.sin(2 * np.pi * x)),
            Density(space, 1 + 0.5 * np.cos(2 * np.pi * x)))


@pytest.fixture(scope="session")
def two_point():
    return build_interval_grid(2, 2.0)


@pytest.fixture(scope="session")
def two_point_solution(two_point):
    rho0 = Density(two_point, [0.8, 0.2])
    rho1 = Density(two_point, [0.3, 0.7])
    return ipfp_solve(two_point, rho0, rho1, 1.0)


@pytest.fixture(scope="session")
def circle64():
    return build_circle_grid(64, 1.0)


@pytest.fixture(scope="session")
def smooth64(circle64):
    rho0, rho1 = smooth_pair(circle64)
    return ipfp_solve(circle64, rho0, rho1, 0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
