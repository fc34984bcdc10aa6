import numpy as np
import pytest

from kzk.eigenbasis import build_basis
from kzk.grid import Field, Grid


@pytest.fixture
def small_grid():
    """Short half-strip with a handful of Dirichlet modes."""
    return Grid(X_max=20.0, nx=201, basis=build_basis("a", 1.0, 4), dt=1e-3, T=0.1)


def bump_field(grid, center=5.0, width=1.0, amplitude=1.0, mode=0):
    x = grid.x
    prof = amplitude * np.exp(-0.5 * ((x - center) / width) ** 2)
    c = np.zeros((grid.nx, grid.basis.count))
    c[:, mode] = prof
    return Field(grid, c)
