"""Built-in initial-data and forcing presets."""

from __future__ import annotations

import numpy as np

from .eigenbasis import eigenfunction
from .grid import Grid
from .nonlinearity import eta


def y_profile(grid: Grid, mode: int = 1, y=None) -> np.ndarray:
    """The ``mode``-th retained eigenfunction of the basis, scaled to unit peak."""
    basis = grid.basis
    if not 1 <= mode <= basis.count:
        raise ValueError(f"y mode {mode} outside 1..{basis.count}")
    y = basis.nodes if y is None else y
    kind, k = basis.kinds[mode - 1], basis.wavenumbers[mode - 1]
    v = eigenfunction(kind, k, basis.L, y)
    peak = 1.0 / np.sqrt(basis.L) if kind == "const" else np.sqrt(2.0 / basis.L)
    return v / peak


def gaussian_bump(grid: Grid, amplitude=1.0, center=None, width=1.0, y_mode=1,
                  taper=1.0) -> np.ndarray:
    """A exp(-(x-c)^2 / 2w^2) * eta(x/taper) * (unit-peak eigenmode in y)."""
    x = grid.x
    c = 0.5 * grid.X_max if center is None else center
    prof = np.exp(-0.5 * ((x - c) / width) ** 2)
    if taper > 0:
        prof = prof * eta(x / taper)
    prof[0] = 0.0
    return amplitude * np.outer(prof, y_profile(grid, y_mode))


def mode_product(grid: Grid, amplitude=1.0, width=1.0, y_mode=1) -> np.ndarray:
    """A (x/w)^2 e^{2 - x/w} / 4 times an eigenmode; peak A at x = 2w."""
    x = grid.x / width
    prof = 0.25 * x * x * np.exp(2.0 - x)
    return amplitude * np.outer(prof, y_profile(grid, y_mode))


def initial_values(grid: Grid, spec: dict) -> np.ndarray:
    kind = spec.get("kind", "gaussian")
    amp = float(spec.get("amplitude", 0.01))
    if kind == "zero" or (kind != "csv" and amp == 0.0):
        return np.zeros((grid.nx, grid.basis.n_nodes))
    if kind == "gaussian":
        center = spec.get("center")
        return gaussian_bump(grid, amp, None if center is None else float(center),
                             float(spec.get("width", 1.0)), int(spec.get("y_mode", 1)),
                             float(spec.get("taper", 1.0)))
    if kind == "mode":
        return mode_product(grid, amp, float(spec.get("width", 1.0)),
                            int(spec.get("y_mode", 1)))
    if kind == "csv":
        from .io import read_field_csv
        values, meta = read_field_csv(spec["path"])
        if values.shape != (grid.nx, grid.basis.n_nodes):
            raise ValueError(f"CSV field has shape {values.shape}, grid expects "
                             f"{(grid.nx, grid.basis.n_nodes)}")
        if abs(meta["X_max"] - grid.X_max) > 1e-12 or abs(meta["L"] - grid.L) > 1e-12:
            raise ValueError("CSV field header does not match the configured domain")
        return float(spec.get("scale", 1.0)) * values
    raise ValueError(f"unknown initial-data kind {kind!r}")


class GaussianForcing:
    """f(t, x, y) = A exp(-(x-c)^2/2w^2) cos(omega t) * eigenmode(y)."""

    def __init__(self, grid: Grid, amplitude=1.0, center=None, width=1.0, y_mode=1,
                 omega=0.0):
        self.amplitude = amplitude
        self.center = 0.5 * grid.X_max if center is None else center
        self.width = width
        self.omega = omega
        self._ymode = y_mode
        self._basis = grid.basis
        self._grid = grid

    def __call__(self, t, x, y):
        prof = np.exp(-0.5 * ((np.asarray(x) - self.center) / self.width) ** 2)
        yp = y_profile(self._grid, self._ymode, y)
        return self.amplitude * np.cos(self.omega * t) * np.multiply.outer(prof, yp)


def forcing_sampler(grid: Grid, spec: dict):
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return None
    if kind == "gaussian":
        center = spec.get("center")
        return GaussianForcing(grid, float(spec.get("amplitude", 1.0)),
                               None if center is None else float(center),
                               float(spec.get("width", 1.0)), int(spec.get("y_mode", 1)),
                               float(spec.get("omega", 0.0)))
    raise ValueError(f"unknown forcing kind {kind!r}")
