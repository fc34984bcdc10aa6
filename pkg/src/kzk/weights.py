"""Admissible weight functions psi(x) on the half-line x >= 0.

A weight is described by a small immutable :class:`WeightSpec`.  Every kind has
a closed form for all derivatives, so ``eval`` never differentiates
numerically.  Derived weights (``psi'``, ``psi''``...) are represented by the
same kind with a larger ``order_offset``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

MAX_ORDER = 5
KINDS = ("exp", "pow", "rho0", "rho0_shifted", "unit")


@dataclass(frozen=True)
class WeightSpec:
    """psi(x) = scale * base^(order_offset)(x) for one of the supported bases.

    ``exp``           base = e^{2 alpha x}
    ``pow``           base = (1 + x)^{2 alpha}
    ``rho0``          base = 1 + (2/pi) arctan x
    ``rho0_shifted``  base = 1 + (2/pi) arctan(x - x0)
    ``unit``          base = 1
    """

    kind: str
    alpha: float = 0.0
    x0: float = 0.0
    scale: float = 1.0
    order_offset: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind in ("exp", "pow") and not self.alpha > 0:
            raise ValueError(f"{self.kind} weight needs alpha > 0, got {self.alpha}")
        if self.scale <= 0:
            raise ValueError("weight scale must be positive")

    @property
    def name(self) -> str:
        if self.kind in ("exp", "pow"):
            base = f"{self.kind}{self.alpha:g}"
        elif self.kind == "rho0_shifted":
            base = f"rho0@{self.x0:g}"
        else:
            base = self.kind
        return base + "'" * self.order_offset

    def __call__(self, x, order=0):
        return eval_weight(self, x, order)


def exponential(alpha: float) -> WeightSpec:
    return WeightSpec("exp", alpha=alpha)


def power(alpha: float) -> WeightSpec:
    return WeightSpec("pow", alpha=alpha)


def rho0() -> WeightSpec:
    return WeightSpec("rho0")


def rho0_shifted(x0: float) -> WeightSpec:
    return WeightSpec("rho0_shifted", x0=x0)


def unit() -> WeightSpec:
    return WeightSpec("unit")


def from_config(kind: str, alpha: float | None = None, x0: float = 0.0) -> WeightSpec:
    """Build a weight from the configuration-file names exp|pow|rho0|unit."""
    kind = kind.strip().lower()
    if kind in ("exp", "pow"):
        if alpha is None:
            raise ValueError(f"weight kind {kind!r} needs an 'alpha' value")
        return WeightSpec(kind, alpha=float(alpha))
    if kind == "rho0":
        return rho0() if not x0 else rho0_shifted(x0)
    if kind == "unit":
        return unit()
    raise ValueError(f"unknown weight kind {kind!r} (expected exp, pow, rho0, unit)")


def _falling(a: float, n: int) -> float:
    out = 1.0
    for k in range(n):
        out *= a - k
    return out


def _arctan_derivative(x, n):
    # d^n/dx^n arctan x = (n-1)! (-1)^{n-1} sin(n theta) / (1+x^2)^{n/2},
    # theta = pi/2 - arctan x
    theta = 0.5 * np.pi - np.arctan(x)
    return (math.factorial(n - 1) * (-1) ** (n - 1)
            * np.sin(n * theta) / (1.0 + x * x) ** (0.5 * n))


def _base_derivative(w: WeightSpec, x, n):
    if w.kind == "exp":
        return (2 * w.alpha) ** n * np.exp(2 * w.alpha * x)
    if w.kind == "pow":
        return _falling(2 * w.alpha, n) * (1.0 + x) ** (2 * w.alpha - n)
    if w.kind in ("rho0", "rho0_shifted"):
        z = x - w.x0 if w.kind == "rho0_shifted" else x
        if n == 0:
            return 1.0 + (2 / np.pi) * np.arctan(z)
        return (2 / np.pi) * _arctan_derivative(z, n)
    # unit
    return np.ones_like(x) if n == 0 else np.zeros_like(x)


def eval_weight(w: WeightSpec, x, order: int = 0):
    """psi^(order)(x) from the closed form; x >= 0, order in 0..5."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("weights are defined on x >= 0 only")
    out = w.scale * _base_derivative(w, xa, order + w.order_offset)
    return float(out) if np.ndim(out) == 0 else out


def log_weight(w: WeightSpec, x, order: int = 0):
    """log |psi^(order)(x)|, overflow-free for exponential kinds."""
    xa = np.asarray(x, dtype=float)
    n = order + w.order_offset
    if w.kind == "exp":
        return np.log(w.scale) + n * np.log(2 * w.alpha) + 2 * w.alpha * xa
    if w.kind == "pow":
        c = abs(_falling(2 * w.alpha, n))
        with np.errstate(divide="ignore"):
            return np.log(w.scale * c) + (2 * w.alpha - n) * np.log1p(xa)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(_base_derivative(w, xa, n) * w.scale))


def derivative_weight(w: WeightSpec) -> WeightSpec:
    """The weight psi' (must itself be positive)."""
    if w.kind == "unit":
        raise ValueError("the unit weight has psi' = 0, which is not a weight")
    if w.kind == "pow" and 2 * w.alpha - w.order_offset - 1 <= 0:
        raise ValueError(
            f"power weight with 2*alpha = {2 * w.alpha:g}: derivative "
            "(1+x)^(2 alpha - 1) is not admissible")
    if w.kind in ("rho0", "rho0_shifted") and w.order_offset >= 1:
        raise ValueError("rho0'' changes sign; only rho0' is a weight")
    return replace(w, order_offset=w.order_offset + 1)


@dataclass(frozen=True)
class AdmissibilityReport:
    c: tuple  # c(1..5)
    c_shift: float
    passed: bool


def check_admissibility(w: WeightSpec, x_max: float = 50.0, n_samples: int = 10_000,
                        cap: float = 1e6) -> AdmissibilityReport:
    """Empirical constants for |psi^(j)| <= c(j) psi and the unit-step ratio.

    ``c_shift`` is the largest max/min ratio of psi over windows [x1, x1+1]
    with x1 sampled on [0, x_max - 1].
    """
    if not x_max > 1:
        raise ValueError("x_max must exceed 1")
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    x = np.linspace(0.0, x_max, n_samples)
    logpsi = log_weight(w, x)
    sign0 = np.sign(eval_weight(w, x[:10]))
    if np.any(sign0 <= 0) or not np.all(np.isfinite(logpsi)):
        return AdmissibilityReport(tuple([math.inf] * MAX_ORDER), math.inf, False)
    cs = []
    for j in range(1, MAX_ORDER + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.exp(log_weight(w, x, j) - logpsi)
        r = np.where(np.isfinite(r), r, 0.0) if w.kind == "unit" else r
        cs.append(float(np.max(r)))

    x1 = np.linspace(0.0, x_max - 1.0, n_samples)
    delta = np.linspace(0.0, 1.0, 101)
    lw = log_weight(w, x1[:, None] + delta[None, :])
    c_shift = float(np.exp(np.max(lw.max(axis=1) - lw.min(axis=1))))
    finite = all(np.isfinite(cs)) and np.isfinite(c_shift)
    passed = bool(finite and max(cs) <= cap and c_shift <= cap)
    return AdmissibilityReport(tuple(cs), c_shift, passed)


@dataclass(frozen=True)
class HypothesisReport:
    weak_c0: float
    weak_uniqueness_ok: bool
    strong_c0: float
    strong_uniqueness_ok: bool
    growth_n: int | None
    growth_ok: bool


def _inf_bounded_below(logf_grid, logf_tail):
    """(infimum on the grid, whether f stays bounded away from 0 at infinity)."""
    inf_c0 = float(np.exp(np.min(logf_grid)))
    tail = np.asarray(logf_tail)
    # a power-law or exponential decay shows up as a steady drop over the
    # last decades of the log-spaced tail
    decaying = tail[-1] < tail[-4] - 1e-6
    return inf_c0, bool(np.isfinite(tail).all() and not decaying and inf_c0 > 0)


def check_theorem_hypotheses(w: WeightSpec, p: float, q: float = 0.0, x_max: float = 50.0,
                             n_samples: int = 5001, n_max: int = 10) -> HypothesisReport:
    """Sampled check of the uniqueness conditions for a weight.

    weak:   (psi')^(2+3p) psi^(p-2) >= c0
    strong: psi' psi^(4q+3) >= c0
    growth: psi <= c (1+x)^n psi' for some integer n <= n_max
    """
    if not 0 <= p < 8 / 3:
        raise ValueError("p must lie in [0, 8/3)")
    if q < 0:
        raise ValueError("q must be non-negative")
    x = np.linspace(0.0, x_max, n_samples)
    xt = np.geomspace(max(x_max, 1.0), 1e8, 25)
    with np.errstate(divide="ignore", invalid="ignore"):
        def logs(xx):
            return log_weight(w, xx), log_weight(w, xx, 1)

        lp, ld = logs(x)
        lpt, ldt = logs(xt)
        if w.kind == "unit" or np.any(eval_weight(w, x[:50], 1) <= 0):
            return HypothesisReport(0.0, False, 0.0, False, None, False)
        weak = (2 + 3 * p) * ld + (p - 2) * lp
        weak_t = (2 + 3 * p) * ldt + (p - 2) * lpt
        strong = ld + (4 * q + 3) * lp
        strong_t = ldt + (4 * q + 3) * lpt
        weak_c0, weak_ok = _inf_bounded_below(weak, weak_t)
        strong_c0, strong_ok = _inf_bounded_below(strong, strong_t)

        growth_n = None
        for n in range(n_max + 1):
            ratio_t = lpt - ldt - n * np.log1p(xt)
            if np.all(np.isfinite(ratio_t)) and ratio_t[-1] <= ratio_t[-4] + 1e-3:
                growth_n = n
                break
    return HypothesisReport(weak_c0, weak_ok, strong_c0, strong_ok, growth_n,
                            growth_n is not None)
