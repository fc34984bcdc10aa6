"""Exact evolution of the linearized equation on a full strip.

u_t - u_xxxxx + u_xxx + u_xyy + b u_x = f is diagonal in the basis
e^{i xi x} psi_l(y): each coefficient turns with frequency
omega = xi^5 + xi^3 + xi lambda_l - b xi.  The real line is replaced by a
large periodic box, and the Duhamel integral by Gauss-Legendre quadrature.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .eigenbasis import EigenBasis

log = logging.getLogger(__name__)

TAIL_FRACTION = 0.1  # outer share of the box monitored for leaked mass
TAIL_TOL = 1e-6


class TailMassWarning(UserWarning):
    """Mass near the box edge: periodic wrap-around may pollute the result."""


def dispersion(xi, lam, b=0.0):
    """omega = xi^5 + xi^3 + xi*lam - b*xi."""
    xi = np.asarray(xi, dtype=float)
    return xi ** 5 + xi ** 3 + xi * lam - b * xi


def group_velocity(xi, lam, b=0.0):
    xi = np.asarray(xi, dtype=float)
    return 5 * xi ** 4 + 3 * xi ** 2 + lam - b


@dataclass(frozen=True)
class SpectralState:
    """Coefficients u_hat[k, l] on the box [center - x_box, center + x_box)."""

    basis: EigenBasis
    x_box: float
    nx: int
    coeffs: np.ndarray = field(repr=False)
    b: float = 0.0
    center: float = 0.0
    t: float = 0.0

    @property
    def length(self) -> float:
        return 2.0 * self.x_box

    @property
    def x_left(self) -> float:
        return self.center - self.x_box

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.length * np.arange(self.nx) / self.nx

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)

    @property
    def omega(self) -> np.ndarray:
        return dispersion(self.xi[:, None], np.asarray(self.basis.eigenvalues)[None, :], self.b)

    @property
    def values(self) -> np.ndarray:
        """Physical samples u(x_i, y_j) on the box grid and the y-nodes."""
        return self.basis.inverse(np.fft.irfft(self.coeffs, n=self.nx, axis=0), axis=1)

    def mode_values(self) -> np.ndarray:
        """Real y-spectral samples c[i, l] on the box grid."""
        return np.fft.irfft(self.coeffs, n=self.nx, axis=0)

    def mass(self) -> float:
        """Discrete int int u^2 over the box (Parseval in y)."""
        return float(self.dx * np.sum(self.mode_values() ** 2))

    def tail_mass_fraction(self) -> float:
        c = self.mode_values()
        total = np.sum(c ** 2)
        if total == 0:
            return 0.0
        edge = int(np.ceil(TAIL_FRACTION * self.nx))
        tail = np.sum(c[:edge] ** 2) + np.sum(c[-edge:] ** 2)
        return float(tail / total)

    def evaluate(self, x) -> np.ndarray:
        """Band-limited interpolant c[x, l] (y-spectral) at arbitrary x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.nx
        w = np.full(self.xi.size, 2.0)
        w[0] = 1.0
        if n % 2 == 0:
            w[-1] = 1.0
        wc = w[:, None] * self.coeffs
        out = np.empty((x.size, self.coeffs.shape[1]))
        step = 64  # bounds the size of the phase matrix
        for i in range(0, x.size, step):
            phase = np.exp(1j * np.outer(x[i:i + step] - self.x_left, self.xi))
            out[i:i + step] = np.real(phase @ wc) / n
        return out


def from_values(basis: EigenBasis, values, x_box: float, nx: int = 512, b: float = 0.0,
                center: float = 0.0) -> SpectralState:
    """Build a state from physical samples on the box grid."""
    values = np.asarray(values, dtype=float)
    if values.shape != (nx, basis.n_nodes):
        raise ValueError(f"expected samples of shape {(nx, basis.n_nodes)}, got {values.shape}")
    coeffs = np.fft.rfft(basis.forward(values, axis=1), axis=0)
    return SpectralState(basis, float(x_box), nx, coeffs, float(b), float(center))


def from_function(basis: EigenBasis, fn, x_box: float, nx: int = 512, b: float = 0.0,
                  center: float = 0.0) -> SpectralState:
    """Sample ``fn(x, y)`` (broadcasting over an (nx, 1) x (1, ny) mesh)."""
    x = center - x_box + 2 * x_box * np.arange(nx) / nx
    vals = np.broadcast_to(fn(x[:, None], basis.nodes[None, :]), (nx, basis.n_nodes))
    return from_values(basis, vals, x_box, nx, b, center)


def _check_tail(state: SpectralState, tol: float = TAIL_TOL) -> float:
    frac = state.tail_mass_fraction()
    if frac > tol:
        warnings.warn(f"tail mass fraction {frac:.3g} exceeds {tol:g}; enlarge the box",
                      TailMassWarning, stacklevel=3)
    return frac


def forcing_coeffs(state: SpectralState, forcing, tau: float) -> np.ndarray:
    vals = forcing(tau, state.x, state.basis.nodes)
    return np.fft.rfft(state.basis.forward(np.asarray(vals, dtype=float), axis=1), axis=0)


def evolve(state: SpectralState, t: float, forcing=None, n_quad: int = 32,
           tail_tol: float = TAIL_TOL) -> SpectralState:
    """Advance by ``t``: phase rotation plus the Duhamel integral of ``forcing``.

    ``forcing(tau, x, y)`` is measured from the state's own time.  A
    :class:`TailMassWarning` is issued when the input or output state carries
    more than ``tail_tol`` of its mass in the outer box margins.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    _check_tail(state, tail_tol)
    if t == 0:
        return state
    om = state.omega
    new = state.coeffs * np.exp(1j * om * t)
    if forcing is not None:
        nodes, wts = np.polynomial.legendre.leggauss(n_quad)
        taus = 0.5 * t * (nodes + 1.0)
        for tau, w in zip(taus, 0.5 * t * wts):
            fh = forcing_coeffs(state, lambda s, x, y: forcing(state.t + s, x, y), tau)
            new = new + w * fh * np.exp(1j * om * (t - tau))
    out = replace(state, coeffs=new, t=state.t + t)
    _check_tail(out, tail_tol)
    return out


def duhamel_constant(f_hat, omega, t):
    """Closed form of int_0^t f_hat e^{i omega (t - tau)} d tau for constant f_hat."""
    omega = np.asarray(omega, dtype=float)
    small = np.abs(omega) < 1e-14
    om = np.where(small, 1.0, omega)
    val = f_hat * (np.exp(1j * om * t) - 1.0) / (1j * om)
    return np.where(small, f_hat * t + 0j, val)


def centroid(state: SpectralState) -> float:
    """Mass-weighted x-centroid on the box."""
    c2 = np.sum(state.mode_values() ** 2, axis=1)
    return float(np.sum(state.x * c2) / np.sum(c2))
