import numpy as np
import pytest

from nwplab import GridSpec, make_gaussian_ring


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(3, 8, 6.0)


@pytest.fixture(scope="session")
def work_grid():
    # roomy enough for verification-grade rings, cheap enough for unit tests
    return GridSpec(3, 48, 16.0)


@pytest.fixture(scope="session")
def work_ring(work_grid):
    return make_gaussian_ring(work_grid, 3.4, 0.74, suppression_scale=1.9)


@pytest.fixture(scope="session")
def work_ring_aniso(work_grid):
    return make_gaussian_ring(work_grid, 3.6, 0.78, direction=(1.0, 0.0, 0.0),
                              anisotropy=0.35, suppression_scale=1.9)


def direct_coordinate_transform(grid, samples):
    """Brute-force realization of the momentum -> coordinate base change."""
    pax = [np.broadcast_to(a, grid.shape).ravel() for a in grid.momentum_axes()]
    xax = [np.broadcast_to(a, grid.shape).ravel() for a in grid.coordinate_axes()]
    phase = np.zeros((grid.size, grid.size), dtype=complex)
    for j in range(grid.n):
        phase += 1j * np.outer(xax[j], pax[j])
    out = np.exp(phase) @ samples.ravel()
    return ((2 * np.pi) ** (-grid.n / 2) * grid.dp ** grid.n * out).reshape(grid.shape)
