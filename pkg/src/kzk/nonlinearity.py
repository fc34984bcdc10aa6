"""Nonlinear flux functions g and the smooth cut-off eta."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# 32-point Gauss-Legendre on [0, 1], used for vectorized antiderivatives
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _sigma(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def eta(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, eta(x) + eta(1 - x) = 1."""
    x = np.asarray(x, dtype=float)
    a = _sigma(x)
    b = _sigma(1.0 - x)
    out = a / (a + b)
    return float(out) if out.ndim == 0 else out


def _antiderivative(fn, u, breaks=()):
    """int_0^u fn(theta) d theta, elementwise, split at |theta| in ``breaks``."""
    u = np.asarray(u, dtype=float)
    total = np.zeros_like(u)
    au = np.abs(u)
    sgn = np.sign(u)
    edges = [0.0] + sorted(b for b in breaks if b > 0)
    for i, lo in enumerate(edges):
        hi = np.minimum(au, edges[i + 1]) if i + 1 < len(edges) else au
        width = np.clip(hi - lo, 0.0, None)
        if not np.any(width > 0):
            continue
        theta = sgn[..., None] * (lo + width[..., None] * _GL_X)
        total += sgn * width * np.sum(fn(theta) * _GL_W, axis=-1)
    return total


@dataclass(frozen=True)
class Nonlinearity:
    """g'(u) for the quadratic, cubic and power-law cases, optionally cut off.

    ``kind``: "none" | "quadratic" | "cubic" | "power".  ``coef`` is a for the
    cubic case (g' = a u^2) and the sign for the power law (g' = sign |u|^p).
    ``h`` > 0 multiplies g' by eta(2 - h|u|).
    """

    kind: str = "quadratic"
    p: float = 1.0
    coef: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "quadratic", "cubic", "power"):
            raise ValueError(f"unknown nonlinearity {self.kind!r}")
        if self.kind == "quadratic":
            object.__setattr__(self, "p", 1.0)
        elif self.kind == "cubic":
            object.__setattr__(self, "p", 2.0)
        if self.kind == "power" and not 0 <= self.p < 8 / 3:
            raise ValueError("power-law exponent p must lie in [0, 8/3)")
        if self.h < 0:
            raise ValueError("cut-off parameter h must be non-negative")

    @property
    def is_zero(self) -> bool:
        return self.kind == "none" or self.coef == 0.0

    @property
    def dealias_fraction(self) -> float:
        return 0.5 if self.kind == "cubic" else 2.0 / 3.0

    # raw (uncut) functions -------------------------------------------------
    def _d1(self, u):
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "quadratic":
            return u
        if self.kind == "cubic":
            return self.coef * u * u
        return self.coef * np.abs(u) ** self.p

    def _g(self, u):
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "quadratic":
            return 0.5 * u * u
        if self.kind == "cubic":
            return self.coef * u ** 3 / 3.0
        return self.coef * np.abs(u) ** self.p * u / (self.p + 1)

    def _gstar(self, u):
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "quadratic":
            return u ** 3 / 6.0
        if self.kind == "cubic":
            return self.coef * u ** 4 / 12.0
        return self.coef * np.abs(u) ** (self.p + 2) / ((self.p + 1) * (self.p + 2))

    def _d1u_star(self, u):
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "quadratic":
            return u ** 3 / 3.0
        if self.kind == "cubic":
            return self.coef * u ** 4 / 4.0
        return self.coef * np.abs(u) ** (self.p + 2) / (self.p + 2)

    def _breaks(self):
        return (1.0 / self.h, 2.0 / self.h) if self.h > 0 else ()

    # public evaluators ------------------------------------------------------
    def dg(self, u):
        """g'(u) (cut off when h > 0)."""
        u = np.asarray(u, dtype=float)
        d = self._d1(u)
        if self.h > 0:
            d = d * eta(2.0 - self.h * np.abs(u))
        return d

    def g(self, u):
        u = np.asarray(u, dtype=float)
        if self.h > 0:
            return _antiderivative(self.dg, u, self._breaks())
        return self._g(u)

    def d2g(self, u):
        """g''(u); only for the uncut functions."""
        u = np.asarray(u, dtype=float)
        if self.h > 0:
            raise NotImplementedError("g'' of the cut-off nonlinearity is not needed")
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "quadratic":
            return np.ones_like(u)
        if self.kind == "cubic":
            return 2 * self.coef * u
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coef * self.p * np.abs(u) ** (self.p - 1) * np.sign(u)

    def gstar(self, u):
        """g*(u) = int_0^u g."""
        u = np.asarray(u, dtype=float)
        if self.h > 0:
            return _antiderivative(self.g, u, self._breaks())
        return self._gstar(u)

    def dgu_star(self, u):
        """(g'(u) u)* = int_0^u g'(theta) theta d theta."""
        u = np.asarray(u, dtype=float)
        if self.h > 0:
            return _antiderivative(lambda t: self.dg(t) * t, u, self._breaks())
        return self._d1u_star(u)

    def growth_constant(self, u):
        """max |g'(u)| / |u|^p over the samples (hypothesis |g'| <= c |u|^p)."""
        u = np.asarray(u, dtype=float)
        u = u[u != 0]
        return float(np.max(np.abs(self.dg(u)) / np.abs(u) ** self.p)) if u.size else 0.0


def from_config(kind: str = "quadratic", p: float = 1.0, a: float = 1.0,
                sign: float = 1.0, h: float = 0.0) -> Nonlinearity:
    kind = kind.strip().lower()
    if kind in ("kzk", "quad"):
        kind = "quadratic"
    coef = a if kind == "cubic" else (sign if kind == "power" else 1.0)
    return Nonlinearity(kind=kind, p=float(p), coef=float(coef), h=float(h))
