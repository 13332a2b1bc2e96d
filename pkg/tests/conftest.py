import numpy as np
import pytest

from cnls_lab import FieldPair, Grid, SystemParams


@pytest.fixture(scope="session")
def grid_1d():
    return Grid(1, 1024, 20.0)


@pytest.fixture(scope="session")
def grid_1d_wide():
    # omega = 1 tails sit right at the support gate on L = 20; rescaling
    # tests need the extra margin
    return Grid(1, 1024, 24.0)


@pytest.fixture(scope="session")
def cubic():
    return SystemParams(p=2.0, beta=0.0, omega1=1.0, omega2=1.0)


def smooth_pair(grid: Grid, seed: int, *, width: float = 2.0) -> FieldPair:
    """Random complex fields under a fixed Gaussian envelope; decays fast
    enough for every quadrature and rescaling in the suite."""
    rng = np.random.default_rng(seed)
    env = np.exp(-grid.radius_sq() / (2.0 * width**2))

    def draw():
        poly = np.zeros(grid.shape, dtype=complex)
        for ax in range(grid.dim):
            sh = [1] * grid.dim
            sh[ax] = grid.points_per_axis
            x = grid.axes[ax].reshape(sh)
            coeff = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            poly = poly + coeff[0] + coeff[1] * x + coeff[2] * x**2
        return env * poly

    return FieldPair(grid, draw(), draw(), copy=False)
