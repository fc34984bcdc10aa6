"""Truncated half-strip grid and discretized fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigenbasis import EigenBasis


@dataclass(frozen=True)
class Grid:
    X_max: float
    nx: int
    basis: EigenBasis
    dt: float = 1e-3
    T: float = 1.0

    def __post_init__(self):
        if self.nx < 16:
            raise ValueError("nx must be at least 16")
        if not self.X_max > 0:
            raise ValueError("X_max must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T < 0:
            raise ValueError("T must be non-negative")

    @property
    def dx(self) -> float:
        return self.X_max / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.X_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.basis.nodes

    @property
    def L(self) -> float:
        return self.basis.L

    @property
    def x_weights(self) -> np.ndarray:
        w = np.full(self.nx, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


@dataclass(frozen=True)
class Field:
    """u(x_i, y) stored as y-spectral coefficients u_hat[i, l]."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.grid.nx, self.grid.basis.count):
            raise ValueError(f"coefficient array has shape {c.shape}, expected "
                             f"{(self.grid.nx, self.grid.basis.count)}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "Field":
        values = np.asarray(values, dtype=float)
        return cls(grid, grid.basis.forward(values, axis=1))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros((grid.nx, grid.basis.count)))

    @property
    def values(self) -> np.ndarray:
        return self.grid.basis.inverse(self.coeffs, axis=1)

    def with_coeffs(self, coeffs) -> "Field":
        return Field(self.grid, coeffs)
