"""Functionals tracked along a trajectory, identity residuals and decay fits.

Every x-derivative reuses the solver stencils and closure, so discrete
identities close to the scheme's own accuracy.  y-integrals are evaluated by
Parseval over the retained eigenmodes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import stencils
from .eigenbasis import STEKLOV_KAPPA
from .grid import Field, Grid
from .nonlinearity import Nonlinearity
from .weights import WeightSpec, eval_weight, log_weight

LAMBDA_FIELDS = ("u_xx", "u_y", "u_xxxx", "u_yy")
EDGE_SHARE_TOL = 1e-6


class UnreliableWeightWarning(UserWarning):
    """The weighted integrand is not negligible at the truncation edge."""


# ---------------------------------------------------------------------------
# basic functionals
# ---------------------------------------------------------------------------

def _xint(grid: Grid, density: np.ndarray) -> float:
    return float(grid.x_weights @ density)


def mass(state: Field) -> float:
    """int int u^2 dx dy."""
    return _xint(state.grid, np.sum(state.coeffs ** 2, axis=1))


def weight_on_grid(w: WeightSpec, x: np.ndarray, order: int = 0) -> np.ndarray:
    return eval_weight(w, x, order)


def weighted_mass(state: Field, w: WeightSpec) -> float:
    """int int u^2 psi(x) dx dy, trapezoid in x and Parseval in y.

    Issues :class:`UnreliableWeightWarning` when the last 10% of the grid
    carries more than a 1e-6 share of the integral or the product overflows.
    """
    grid = state.grid
    dens = np.sum(state.coeffs ** 2, axis=1)
    with np.errstate(divide="ignore", over="ignore"):
        logp = log_weight(w, grid.x) + np.log(dens)
        integrand = np.exp(logp)
    integrand[dens == 0] = 0.0
    total = _xint(grid, integrand)
    if not math.isfinite(total):
        warnings.warn(f"weighted mass overflows for weight {w.name}", UnreliableWeightWarning,
                      stacklevel=2)
        return total
    edge = grid.x >= 0.9 * grid.X_max
    if total > 0 and float(grid.x_weights[edge] @ integrand[edge]) > EDGE_SHARE_TOL * total:
        warnings.warn(f"weighted mass for {w.name} has a non-negligible share at X_max",
                      UnreliableWeightWarning, stacklevel=2)
    return total


def u_y_density(coeffs: np.ndarray, eigenvalues) -> np.ndarray:
    """int u_y^2 dy at every x (Parseval: sum lambda_l c_l^2)."""
    return coeffs ** 2 @ np.asarray(eigenvalues)


def h1_energy(state: Field, nl: Nonlinearity | None = None) -> float:
    """int int (u_xx^2 + u_x^2 + u_y^2 - 2 g*(u)) dx dy."""
    grid, c = state.grid, state.coeffs
    ux = stencils.derivative(c, grid.dx, 1)
    uxx = stencils.derivative(c, grid.dx, 2)
    dens = np.sum(uxx ** 2 + ux ** 2, axis=1) + u_y_density(c, grid.basis.eigenvalues)
    if nl is not None and not nl.is_zero:
        gs = nl.gstar(state.values)
        dens = dens - 2.0 * (gs @ grid.basis.weights)
    return _xint(grid, dens)


def strong_weighted_norm(state: Field, w: WeightSpec) -> float:
    """||psi^{1/2} u||^2 in the H1-type norm: int int (v_xx^2 + v_x^2 + v_y^2 + v^2), v = psi^{1/2} u."""
    grid = state.grid
    v = np.sqrt(eval_weight(w, grid.x))[:, None] * state.coeffs
    vx = stencils.derivative(v, grid.dx, 1)
    vxx = stencils.derivative(v, grid.dx, 2)
    dens = np.sum(vxx ** 2 + vx ** 2 + v ** 2, axis=1) + u_y_density(v, grid.basis.eigenvalues)
    return _xint(grid, dens)


def mu2_coeffs(state: Field) -> np.ndarray:
    return stencils.boundary_uxx(state.coeffs, state.grid.dx)


def mu2_norm(state: Field) -> float:
    """int_0^L mu_2^2 dy with mu_2 = u_xx(0, y)."""
    return float(np.sum(mu2_coeffs(state) ** 2))


def steklov_weighted_ratio(state: Field, w: WeightSpec) -> float:
    """int int u_y^2 psi / int int u^2 psi; bounded below by pi^2/(kappa L^2) for families a and c."""
    grid = state.grid
    psi = eval_weight(w, grid.x)
    num = _xint(grid, psi * u_y_density(state.coeffs, grid.basis.eigenvalues))
    den = _xint(grid, psi * np.sum(state.coeffs ** 2, axis=1))
    return num / den if den > 0 else math.inf


# ---------------------------------------------------------------------------
# localized lambda+ norm
# ---------------------------------------------------------------------------

def _field_density(state: Field, name: str) -> np.ndarray:
    grid, c = state.grid, state.coeffs
    lam = np.asarray(grid.basis.eigenvalues)
    if name == "u_xx":
        return np.sum(stencils.derivative(c, grid.dx, 2) ** 2, axis=1)
    if name == "u_xxxx":
        return np.sum(stencils.derivative(c, grid.dx, 4) ** 2, axis=1)
    if name == "u_y":
        return c ** 2 @ lam
    if name == "u_yy":
        return c ** 2 @ lam ** 2
    if name == "u":
        return np.sum(c ** 2, axis=1)
    raise ValueError(f"unknown lambda+ field {name!r}")


def window_masses(grid: Grid, density: np.ndarray, width: float = 1.0) -> np.ndarray:
    """int_{x_i}^{x_i + width} density dx for every grid start x_i with x_i + width <= X_max."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * grid.dx * (density[1:] + density[:-1]))])
    k = int(round(width / grid.dx))
    if k >= grid.nx:
        return cum[-1:] - cum[:1]
    return cum[k:] - cum[:-k]


@dataclass
class LambdaPlus:
    """Running sup over unit windows of the time-integrated local mass."""

    field_name: str
    windows: np.ndarray | None = None
    t: float = 0.0

    @property
    def value(self) -> float:
        return 0.0 if self.windows is None else float(np.max(self.windows))

    def update(self, state: Field, dt: float) -> "LambdaPlus":
        wm = window_masses(state.grid, _field_density(state, self.field_name))
        new = dt * wm if self.windows is None else self.windows + dt * wm
        return LambdaPlus(self.field_name, new, self.t + dt)


def lambda_plus_update(acc: LambdaPlus, state: Field, dt: float) -> LambdaPlus:
    return acc.update(state, dt)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    weighted_mass: dict = field(default_factory=dict)
    h1_energy: float = 0.0
    mu2_norm: float = 0.0
    lambda_plus: dict = field(default_factory=dict)
    strong_norm: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        return (["t", "mass"] + [f"weighted_mass:{k}" for k in self.weighted_mass]
                + ["h1_energy", "mu2_norm"] + [f"lambda_plus:{k}" for k in self.lambda_plus]
                + [f"strong_norm:{k}" for k in self.strong_norm])

    def row(self) -> list[float]:
        return ([self.t, self.mass] + list(self.weighted_mass.values())
                + [self.h1_energy, self.mu2_norm] + list(self.lambda_plus.values())
                + list(self.strong_norm.values()))


def make_record(state: Field, t: float, weights: dict | None = None,
                nl: Nonlinearity | None = None, lambda_plus: dict | None = None,
                strong: bool = True) -> DiagnosticsRecord:
    weights = weights or {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnreliableWeightWarning)
        wm = {k: weighted_mass(state, w) for k, w in weights.items()}
    sn = {k: strong_weighted_norm(state, w) for k, w in weights.items()} if strong else {}
    lp = {k: acc.value for k, acc in (lambda_plus or {}).items()}
    return DiagnosticsRecord(t, mass(state), wm, h1_energy(state, nl), mu2_norm(state), lp, sn)


# ---------------------------------------------------------------------------
# weighted energy identity
# ---------------------------------------------------------------------------

@dataclass
class IdentityResidual:
    times: np.ndarray
    residual: np.ndarray
    terms: dict
    scale: float
    relative: float
    coarse_relative: float = math.nan
    cadence_limited: bool = False


def identity_terms(state: Field, w: WeightSpec, nl: Nonlinearity | None = None,
                   b: float = 0.0, forcing_values: np.ndarray | None = None) -> dict:
    """Every non-derivative term of the weighted identity at one instant.

    The identity reads  d/dt M + diss_1 + diss_3 + diss_5 + boundary = source_f + source_g
    with M = int int u^2 psi.
    """
    grid, c = state.grid, state.coeffs
    x, h = grid.x, grid.dx
    p1, p3, p5 = (eval_weight(w, x, k) for k in (1, 3, 5))
    ux = stencils.derivative(c, h, 1)
    uxx = stencils.derivative(c, h, 2)
    u2 = np.sum(c ** 2, axis=1)
    ux2 = np.sum(ux ** 2, axis=1)
    uxx2 = np.sum(uxx ** 2, axis=1)
    uy2 = u_y_density(c, grid.basis.eigenvalues)
    terms = {
        "weighted_mass": _xint(grid, eval_weight(w, x) * u2),
        "diss_1": _xint(grid, (5 * uxx2 + 3 * ux2 + uy2 - b * u2) * p1),
        "diss_3": -_xint(grid, (5 * ux2 + u2) * p3),
        "diss_5": _xint(grid, u2 * p5),
        "boundary": float(eval_weight(w, 0.0)) * mu2_norm(state),
        "source_f": 0.0,
        "source_g": 0.0,
    }
    if forcing_values is not None:
        fc = grid.basis.forward(forcing_values, axis=1)
        terms["source_f"] = 2.0 * _xint(grid, eval_weight(w, x) * np.sum(fc * c, axis=1))
    if nl is not None and not nl.is_zero:
        dens = nl.dgu_star(state.values) @ grid.basis.weights
        terms["source_g"] = 2.0 * _xint(grid, dens * p1)
    return terms


def _residual_from_terms(times, series) -> tuple[np.ndarray, np.ndarray]:
    dm = np.gradient(series["weighted_mass"], times, edge_order=2)
    res = (dm + series["diss_1"] + series["diss_3"] + series["diss_5"] + series["boundary"]
           - series["source_f"] - series["source_g"])
    return dm, res


def energy_identity_residual(states, times, w: WeightSpec, nl: Nonlinearity | None = None,
                             b: float = 0.0, forcing=None) -> IdentityResidual:
    """LHS - RHS of the weighted identity along stored snapshots.

    ``states`` is a sequence of :class:`Field` at uniform ``times``.  The
    time derivative is second-order central (one-sided at the ends).  The
    residual is recomputed on every other sample; ``cadence_limited`` is set
    when that changes the relative residual by more than 2x.
    """
    times = np.asarray(times, dtype=float)
    if len(states) != len(times) or len(times) < 5:
        raise ValueError("need at least 5 snapshots with matching times")
    steps = np.diff(times)
    if np.ptp(steps) > 1e-9 * max(steps.max(), 1e-300):
        raise ValueError("snapshot times must be uniform")
    keys = ("weighted_mass", "diss_1", "diss_3", "diss_5", "boundary", "source_f", "source_g")
    rows = []
    for s, t in zip(states, times):
        fv = None if forcing is None else forcing(t, s.grid.x, s.grid.basis.nodes)
        rows.append(identity_terms(s, w, nl, b, fv))
    series = {k: np.array([r[k] for r in rows]) for k in keys}
    dm, res = _residual_from_terms(times, series)
    series["d_dt_weighted_mass"] = dm
    scale = max(float(np.max(np.abs(series[k]))) for k in keys[1:] + ("d_dt_weighted_mass",))
    rel = float(np.max(np.abs(res))) / scale if scale > 0 else 0.0
    out = IdentityResidual(times, res, series, scale, rel)
    if len(times) >= 10:
        sub = {k: v[::2] for k, v in series.items()}
        _, res2 = _residual_from_terms(times[::2], sub)
        out.coarse_relative = float(np.max(np.abs(res2))) / scale if scale > 0 else 0.0
        if rel > 0 and (out.coarse_relative / rel > 2.0 or rel / out.coarse_relative > 2.0):
            out.cadence_limited = True
    return out


def strong_energy_flux_ratio(times, h1, mu2) -> float:
    """sup_t (dE/dt) / int mu_2^2 for E the second conserved functional (expected bounded)."""
    times, h1, mu2 = (np.asarray(a, dtype=float) for a in (times, h1, mu2))
    de = np.gradient(h1, times)
    ok = mu2 > 1e-300
    if not np.any(ok):
        return 0.0
    return float(np.max(de[ok] / mu2[ok]))


# ---------------------------------------------------------------------------
# decay constants and fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayConstants:
    b: float
    L: float
    family: str
    kappa: float
    p: float
    L0: float
    alpha0: float
    beta: float
    epsilon0: float | None = None
    violations: tuple = ()

    @property
    def gate_ok(self) -> bool:
        return not self.violations

    def rate(self, alpha: float) -> float:
        return alpha * self.beta


def _alpha0(beta: float) -> float:
    cap = math.sqrt(0.1)

    def f(a):
        return 8 * a * a + 32 * a ** 4 - beta

    if f(cap) <= 0:
        return cap
    lo, hi = 0.0, cap
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def decay_constants(b: float, L: float, family: str = "a", p: float = 1.0,
                    epsilon0: float | None = None) -> DecayConstants:
    """kappa, L0, beta and the largest admissible alpha0 for the decay theorems."""
    fam = str(family).lower()
    if fam not in STEKLOV_KAPPA:
        raise ValueError(f"decay constants exist only for families a and c, got {family!r}")
    if not L > 0:
        raise ValueError("L must be positive")
    kappa = STEKLOV_KAPPA[fam]
    beta = math.pi ** 2 / (10 * kappa * L ** 2)
    L0 = math.pi / math.sqrt(20 * kappa * b) if b > 0 else math.inf
    violations = []
    if L >= L0:
        violations.append(f"L = {L:g} is not below L0 = {L0:.6g} for b = {b:g}")
    return DecayConstants(float(b), float(L), fam, kappa, float(p), L0, _alpha0(beta), beta,
                          epsilon0, tuple(violations))


@dataclass(frozen=True)
class DecayFit:
    rate: float
    stderr: float
    n_used: int
    t_start: float
    t_end: float
    truncated: bool = False


FLOOR = 1e-300
REL_FLOOR = 1e-20  # roundoff floor of a quadratic functional relative to its start value


def usable_window(m, rel_floor: float = REL_FLOOR) -> int:
    """Number of leading samples above the floating-point floor."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    floor = max(FLOOR, rel_floor * abs(float(m[0])))
    bad = np.nonzero(~(m > floor))[0]
    return int(bad[0]) if bad.size else int(m.size)


def decay_fit(t, m, t_start: float | None = None, min_samples: int = 20,
              rel_floor: float = REL_FLOOR) -> DecayFit:
    """Least-squares rate r = -d log m / dt over [t_start, end].

    The series is cut at the first sample at or below the floating-point
    floor (``rel_floor`` times the first value); ``truncated`` flags the
    cut.  The default ``t_start`` is 0.2 times the end of the usable window.
    """
    t = np.asarray(t, dtype=float)
    m = np.asarray(m, dtype=float)
    n = usable_window(m, rel_floor)
    truncated = n < m.size
    t, m = t[:n], m[:n]
    if t.size == 0:
        raise ValueError("no samples above the floating-point floor")
    if t_start is None:
        t_start = 0.2 * t[-1]
    sel = t >= t_start
    t, m = t[sel], m[sel]
    if t.size < min_samples:
        raise ValueError(f"decay fit needs at least {min_samples} positive samples, got {t.size}")
    y = np.log(m)
    if np.ptp(y) == 0.0:
        return DecayFit(0.0, 0.0, t.size, float(t[0]), float(t[-1]), truncated)
    res = stats.linregress(t, y)
    return DecayFit(float(-res.slope), float(res.stderr), t.size, float(t[0]), float(t[-1]),
                    truncated)
