"""Randomized checks of the weighted interpolation and trace inequalities.

Test functions are finite sums phi(x, y) = sum_j X_j(x) Y_j(y).  Each X_j is
a combination of terms c exp(a x^2 + b x + d) (Gaussians and decaying
exponentials), so every x-derivative is exact; each Y_j is a random
truncated eigen-expansion, so y-derivatives are exact too.  Norms are
trapezoid quadratures on a uniform grid, and L_inf norms are grid maxima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import weights as W
from .eigenbasis import eigenfunction, mode_table
from .weights import WeightSpec

DEFAULT_SEED = 42


def interpolation_exponent(m: int, q: float) -> float:
    """s(m, q) = (2m + 3)/8 - 3/(4q); q = inf allowed for m = 0."""
    if m == 0:
        if not (q >= 2):
            raise ValueError("m = 0 requires q in [2, inf]")
    elif m == 1:
        if not (2 <= q <= 6):
            raise ValueError("m = 1 requires q in [2, 6]")
    else:
        raise ValueError("m must be 0 or 1")
    tail = 0.0 if math.isinf(q) else 3.0 / (4.0 * q)
    return (2 * m + 3) / 8.0 - tail


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpQuad:
    """c * exp(a x^2 + b x + d)."""

    c: float
    a: float
    b: float
    d: float = 0.0

    def derivatives(self, x: np.ndarray):
        e = self.c * np.exp(self.a * x * x + self.b * x + self.d)
        r = 2 * self.a * x + self.b
        return e, r * e, (r * r + 2 * self.a) * e


def _profile(terms, x):
    f = np.zeros_like(x)
    fx = np.zeros_like(x)
    fxx = np.zeros_like(x)
    for t in terms:
        a, b, c = t.derivatives(x)
        f += a
        fx += b
        fxx += c
    return f, fx, fxx


@dataclass(frozen=True)
class TestFunction:
    """phi = sum_j profile_j(x) * (sum_k coef_jk e_k(y))."""

    __test__ = False  # not a pytest class

    x_terms: tuple       # tuple of tuples of ExpQuad
    y_coeffs: np.ndarray  # (J, K)
    family: str
    L: float
    scale: float = 1.0

    def scaled(self, lam: float) -> "TestFunction":
        return TestFunction(self.x_terms, self.y_coeffs, self.family, self.L, self.scale * lam)

    def sample(self, x: np.ndarray, y: np.ndarray) -> dict:
        """phi, phi_x, phi_xx, phi_y on the tensor grid (len(x), len(y))."""
        modes = mode_table(self.family, self.L, self.y_coeffs.shape[1])
        E = np.array([eigenfunction(k, w, self.L, y) for (_, _, k, w) in modes])
        Ey = np.array([eigenfunction(k, w, self.L, y, 1) for (_, _, k, w) in modes])
        out = {k: np.zeros((x.size, y.size)) for k in ("phi", "phi_x", "phi_xx", "phi_y")}
        for terms, coef in zip(self.x_terms, self.y_coeffs):
            f, fx, fxx = _profile(terms, x)
            Y = coef @ E
            Yy = coef @ Ey
            out["phi"] += np.outer(f, Y)
            out["phi_x"] += np.outer(fx, Y)
            out["phi_xx"] += np.outer(fxx, Y)
            out["phi_y"] += np.outer(f, Yy)
        if self.scale != 1.0:
            for k in out:
                out[k] *= self.scale
        return out


@dataclass
class TestFunctionEnsemble:
    """Deterministic random test functions and the quadrature grid.

    ``vanish_at_zero`` multiplies each x-profile by (1 - e^{-k x}), folded in
    as extra exponential terms, so that phi(0, y) = 0 exactly.
    ``min_decay`` bounds the exponential decay rates from below so the
    weighted integrands are negligible at ``X_max``.
    """

    __test__ = False  # not a pytest class

    size: int = 200
    seed: int = DEFAULT_SEED
    X_max: float = 40.0
    nx: int = 801
    ny: int = 65
    L: float = 1.0
    family: str = "a"
    vanish_at_zero: bool = True
    n_components: int = 2
    n_terms: int = 3
    n_ymodes: int = 5
    min_decay: float = 0.6
    _cache: list = field(default_factory=list, repr=False)

    @classmethod
    def of(cls, functions, **grid) -> "TestFunctionEnsemble":
        """An ensemble holding the given test functions instead of random draws."""
        functions = list(functions)
        ens = cls(size=len(functions), **grid)
        ens._cache.extend(functions)
        return ens

    def refined(self, factor: int = 2) -> "TestFunctionEnsemble":
        return TestFunctionEnsemble(self.size, self.seed, self.X_max,
                                    factor * (self.nx - 1) + 1, factor * (self.ny - 1) + 1,
                                    self.L, self.family, self.vanish_at_zero, self.n_components,
                                    self.n_terms, self.n_ymodes, self.min_decay)

    def with_L(self, L: float) -> "TestFunctionEnsemble":
        return TestFunctionEnsemble(self.size, self.seed, self.X_max, self.nx, self.ny, L,
                                    self.family, self.vanish_at_zero, self.n_components,
                                    self.n_terms, self.n_ymodes, self.min_decay)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.X_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.ny)

    @property
    def x_weights(self) -> np.ndarray:
        return _trap_weights(self.nx, self.X_max / (self.nx - 1))

    @property
    def y_weights(self) -> np.ndarray:
        return _trap_weights(self.ny, self.L / (self.ny - 1))

    def _draw(self, rng: np.random.Generator) -> TestFunction:
        comps = []
        for _ in range(self.n_components):
            terms = []
            for _ in range(self.n_terms):
                c = rng.normal()
                if rng.random() < 0.5:
                    center = rng.uniform(0.5, 8.0)
                    w = rng.uniform(0.5, 3.0)
                    terms.append(ExpQuad(c, -0.5 / w ** 2, center / w ** 2, -0.5 * center ** 2 / w ** 2))
                else:
                    terms.append(ExpQuad(c, 0.0, -rng.uniform(self.min_decay, 2.0)))
            if self.vanish_at_zero:
                k = rng.uniform(0.5, 3.0)
                terms = terms + [ExpQuad(-t.c, t.a, t.b - k, t.d) for t in terms]
            comps.append(tuple(terms))
        decay = 1.0 / np.arange(1, self.n_ymodes + 1) ** 2
        coef = rng.normal(size=(self.n_components, self.n_ymodes)) * decay
        return TestFunction(tuple(comps), coef, self.family, self.L)

    def functions(self) -> list[TestFunction]:
        if not self._cache:
            seeds = np.random.SeedSequence(self.seed).spawn(self.size)
            self._cache.extend(self._draw(np.random.default_rng(s)) for s in seeds)
        return list(self._cache)

    def samples(self):
        x, y = self.x, self.y
        for tf in self.functions():
            yield tf.sample(x, y)


def _trap_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _integral(f2: np.ndarray, wx: np.ndarray, wy: np.ndarray) -> float:
    return float(wx @ f2 @ wy)


def lq_norm(F: np.ndarray, q: float, wx: np.ndarray, wy: np.ndarray) -> float:
    if math.isinf(q):
        return float(np.max(np.abs(F)))
    return _integral(np.abs(F) ** q, wx, wy) ** (1.0 / q)


# ---------------------------------------------------------------------------
# weighted interpolation inequality
# ---------------------------------------------------------------------------

@dataclass
class RatioReport:
    name: str
    params: dict
    ratios: np.ndarray
    max_ratio: float
    finite: bool

    @property
    def passed(self) -> bool:
        return self.finite


def _interpolation_ratio(smp: dict, m: int, q: float, s: float, lw1: np.ndarray, lw2: np.ndarray,
                   wx, wy) -> float:
    d = smp["phi_x"] if m == 1 else smp["phi"]
    lhs = lq_norm(d * np.exp(s * lw1 + (0.5 - s) * lw2)[:, None], q, wx, wy)
    core = (np.abs(smp["phi_xx"]) + np.abs(smp["phi_y"]) + np.abs(smp["phi"])) * np.exp(0.5 * lw1)[:, None]
    A = math.sqrt(_integral(core ** 2, wx, wy))
    B = math.sqrt(_integral(smp["phi"] ** 2 * np.exp(lw2)[:, None], wx, wy))
    rhs = A ** (2 * s) * B ** (1 - 2 * s)
    if rhs == 0.0:
        if lhs > 0.0:
            raise ArithmeticError("zero right-hand side with a nonzero left-hand side")
        return 0.0
    return lhs / rhs


def check_lemma21(m: int, q: float, psi1: WeightSpec, psi2: WeightSpec,
                  ensemble: TestFunctionEnsemble, scale: float = 1.0) -> RatioReport:
    """LHS/RHS of the weighted interpolation inequality per sample.

    LHS = ||d_x^m phi psi1^s psi2^{1/2-s}||_q and
    RHS = ||(|phi_xx| + |phi_y| + |phi|) psi1^{1/2}||_2^{2s} ||phi psi2^{1/2}||_2^{1-2s}.
    """
    s = interpolation_exponent(m, q)
    x = ensemble.x
    lw1, lw2 = W.log_weight(psi1, x), W.log_weight(psi2, x)
    wx, wy = ensemble.x_weights, ensemble.y_weights
    ratios = []
    for tf in ensemble.functions():
        smp = (tf.scaled(scale) if scale != 1.0 else tf).sample(x, ensemble.y)
        ratios.append(_interpolation_ratio(smp, m, q, s, lw1, lw2, wx, wy))
    r = np.array(ratios)
    return RatioReport("interpolation", {"m": m, "q": q, "psi1": psi1.name, "psi2": psi2.name},
                       r, float(np.max(r)) if r.size else 0.0, bool(np.all(np.isfinite(r))))


# ---------------------------------------------------------------------------
# first-derivative and boundary-trace bounds
# ---------------------------------------------------------------------------

@dataclass
class TraceReport:
    """Empirical constants for the derivative and trace bounds.

    ``c_derivative`` = max LHS/(sqrt(A B) + B) and ``c_trace`` = max
    LHS/(A^{3/4} B^{1/4} + B), with A = int int phi_xx^2 psi, B = int int phi^2 psi.
    ``geometric`` is max LHS/sqrt(A B) for the derivative bound.
    """

    c_derivative: float
    c_trace: float
    geometric: float
    per_sample: np.ndarray
    finite: bool


def trace_terms(smp: dict, psi_vals: np.ndarray, wx, wy) -> tuple:
    A = _integral(smp["phi_xx"] ** 2 * psi_vals[:, None], wx, wy)
    B = _integral(smp["phi"] ** 2 * psi_vals[:, None], wx, wy)
    D = _integral(smp["phi_x"] ** 2 * psi_vals[:, None], wx, wy)
    trace = float(smp["phi_x"][0] ** 2 @ wy)
    return A, B, D, trace


def check_lemma22(psi: WeightSpec, ensemble: TestFunctionEnsemble) -> TraceReport:
    x = ensemble.x
    pv = W.eval_weight(psi, x)
    wx, wy = ensemble.x_weights, ensemble.y_weights
    rows = []
    for smp in ensemble.samples():
        A, B, D, tr = trace_terms(smp, pv, wx, wy)
        den1 = math.sqrt(A * B) + B
        den2 = A ** 0.75 * B ** 0.25 + B
        rows.append((D / den1 if den1 > 0 else 0.0,
                     tr / den2 if den2 > 0 else 0.0,
                     D / math.sqrt(A * B) if A * B > 0 else 0.0))
    r = np.array(rows).reshape(-1, 3)
    return TraceReport(float(r[:, 0].max()), float(r[:, 1].max()), float(r[:, 2].max()), r,
                       bool(np.all(np.isfinite(r))))


# ---------------------------------------------------------------------------
# unweighted anisotropic bounds
# ---------------------------------------------------------------------------

def box_sup_ratio(f, fxx, fy, wx, wy) -> float:
    """||f||_inf / (int int (f_xx^2 + f_y^2 + f^2))^{3/8} (int int f^2)^{1/8} on one box."""
    I = _integral(fxx ** 2 + fy ** 2 + f ** 2, wx, wy)
    J = _integral(f ** 2, wx, wy)
    den = I ** 0.375 * J ** 0.125
    return float(np.max(np.abs(f))) / den if den > 0 else 0.0


@dataclass
class AnisotropicReport:
    c_box_sup: float
    c_l6: float
    per_sample: np.ndarray
    finite: bool


def check_base_anisotropic(ensemble: TestFunctionEnsemble) -> AnisotropicReport:
    """Sup-norm bound on unit boxes (0..X_max-1) and the L6 bound for phi_x on the strip."""
    x = ensemble.x
    wy = ensemble.y_weights
    wx_full = ensemble.x_weights
    h = ensemble.X_max / (ensemble.nx - 1)
    k = int(round(1.0 / h))
    rows = []
    for smp in ensemble.samples():
        best = 0.0
        for start in range(0, ensemble.nx - k, k):
            sl = slice(start, start + k + 1)
            wx = _trap_weights(k + 1, h)
            best = max(best, box_sup_ratio(smp["phi"][sl], smp["phi_xx"][sl], smp["phi_y"][sl],
                                           wx, wy))
        I = _integral(smp["phi_xx"] ** 2 + smp["phi_y"] ** 2 + smp["phi"] ** 2, wx_full, wy)
        l6 = lq_norm(smp["phi_x"], 6.0, wx_full, wy)
        rows.append((best, l6 / math.sqrt(I) if I > 0 else 0.0))
    r = np.array(rows).reshape(-1, 2)
    del x
    return AnisotropicReport(float(r[:, 0].max()), float(r[:, 1].max()), r,
                             bool(np.all(np.isfinite(r))))


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------

MQ_GRID = ((0, 2.0), (0, 4.0), (0, math.inf), (1, 2.0), (1, 6.0))
WEIGHT_PAIRS = (("unit", "unit"), ("exp0.2", "exp0.2"), ("exp0.2", "unit"))


def named_weight(name: str) -> WeightSpec:
    if name == "unit":
        return W.unit()
    if name.startswith("exp"):
        return W.exponential(float(name[3:]))
    raise ValueError(f"unknown weight name {name!r}")


@dataclass
class SuiteRow:
    lemma: str
    params: str
    constant: float
    refined_constant: float
    passed: bool


def run_suite(ensemble: TestFunctionEnsemble | None = None, refine: bool = True,
              tol: float = 0.10) -> list[SuiteRow]:
    """All interpolation cases plus the derivative, trace and anisotropic bounds.

    A row passes when every ratio is finite and, with ``refine``, the
    maximum moves by at most ``tol`` (relative) under grid doubling.
    """
    ens = ensemble or TestFunctionEnsemble()
    fine = ens.refined() if refine else None
    rows = []

    def stable(a, b):
        return (not refine) or abs(b - a) <= tol * max(abs(a), 1e-300)

    for m, q in MQ_GRID:
        for n1, n2 in WEIGHT_PAIRS:
            p1, p2 = named_weight(n1), named_weight(n2)
            r0 = check_lemma21(m, q, p1, p2, ens)
            r1 = check_lemma21(m, q, p1, p2, fine) if refine else r0
            rows.append(SuiteRow("interpolation", f"m={m};q={q:g};psi1={n1};psi2={n2}",
                                 r0.max_ratio, r1.max_ratio,
                                 r0.finite and r1.finite and stable(r0.max_ratio, r1.max_ratio)))
    free = TestFunctionEnsemble(ens.size, ens.seed, ens.X_max, ens.nx, ens.ny, ens.L, ens.family,
                                False, ens.n_components, ens.n_terms, ens.n_ymodes, ens.min_decay)
    free_fine = free.refined() if refine else free
    for name in ("unit", "exp0.2"):
        w = named_weight(name)
        a = check_lemma22(w, free)
        b = check_lemma22(w, free_fine) if refine else a
        ok = a.finite and b.finite
        rows.append(SuiteRow("derivative", f"psi={name}", a.c_derivative, b.c_derivative,
                             ok and stable(a.c_derivative, b.c_derivative)))
        rows.append(SuiteRow("trace", f"psi={name}", a.c_trace, b.c_trace,
                             ok and stable(a.c_trace, b.c_trace)))
    a = check_base_anisotropic(free)
    b = check_base_anisotropic(free_fine) if refine else a
    ok = a.finite and b.finite
    rows.append(SuiteRow("box_sup", "unit boxes", a.c_box_sup, b.c_box_sup,
                         ok and stable(a.c_box_sup, b.c_box_sup)))
    rows.append(SuiteRow("l6_derivative", "half-strip", a.c_l6, b.c_l6,
                         ok and stable(a.c_l6, b.c_l6)))
    return rows
