"""IMEX time stepping of u_t - u_xxxxx + u_xxx + u_xyy + b u_x + g'(u) u_x = f.

Space: eigenfunction expansion in y, second-order finite differences in x on
[0, X_max] with u = u_x = 0 at x = 0 and u = u_x = u_xx = 0 at x = X_max.
Time: Crank-Nicolson on the linear operator (one banded solve per y-mode,
all modes stacked into one band matrix), two-step Adams-Bashforth on the
nonlinear term with an explicit-midpoint start.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from . import stencils
from .eigenbasis import EigenBasis
from .grid import Field, Grid
from .nonlinearity import Nonlinearity, eta

log = logging.getLogger(__name__)

KL = KU = 3


class SolverError(RuntimeError):
    pass


class BlowUpError(SolverError):
    """Non-finite values appeared in the state."""


def assemble_linear_operator(grid: Grid, b: float) -> list[np.ndarray]:
    """Per-mode band matrices of d5 - d3 + (lambda_l - b) d1 (u_t = M_l u + ...).

    The dissipative form used elsewhere is A_l = -M_l (u_t = -A_l u + ...).
    Band storage as in :func:`stencils.banded_operator`.
    """
    return [stencils.banded_operator(grid.nx, grid.dx, lam, b)
            for lam in grid.basis.eigenvalues]


def apply_linear(coeffs: np.ndarray, h: float, eigenvalues: np.ndarray, b: float) -> np.ndarray:
    """M u at every node (boundary rows zero), vectorized over y-modes."""
    ext = stencils.extend(coeffs)
    n = coeffs.shape[0]
    out = np.zeros_like(coeffs)
    out[1:n - 1] = (stencils.apply(ext, stencils.D5, h, 5, 1, n - 1)
                    - stencils.apply(ext, stencils.D3, h, 3, 1, n - 1)
                    + (eigenvalues - b) * stencils.apply(ext, stencils.D1, h, 1, 1, n - 1))
    return out


def boundary_trace_mu2(state: Field) -> np.ndarray:
    """mu_2(y_j) = u_xx(0, y_j) from the one-sided closure stencil."""
    c = stencils.boundary_uxx(state.coeffs, state.grid.dx)
    return state.grid.basis.inverse(c)


def sponge_profile(x: np.ndarray, X_max: float, strength: float, fraction=0.1) -> np.ndarray:
    start = (1.0 - fraction) * X_max
    s = np.clip((x - start) / (X_max - start), 0.0, None)
    return strength * s * s


class Stepper:
    """Advance y-spectral coefficients by one IMEX step.

    The Crank-Nicolson matrix is factored once; ``step`` keeps the previous
    nonlinear evaluation for the Adams-Bashforth extrapolation.
    """

    def __init__(self, grid: Grid, b: float = 0.0, nl: Nonlinearity | None = None,
                 forcing=None, dt: float | None = None, sponge: float = 0.0):
        self.grid = grid
        self.b = float(b)
        self.nl = nl or Nonlinearity("none")
        self.forcing = forcing
        self.dt = grid.dt if dt is None else float(dt)
        self.h = grid.dx
        self.lam = np.asarray(grid.basis.eigenvalues)
        self.mask = grid.basis.dealias_mask(self.nl.dealias_fraction)
        self._prev_nl = None
        self._n = grid.nx - 2
        self._damp = None
        if sponge > 0:
            self._damp = np.exp(-self.dt * sponge_profile(grid.x, grid.X_max, sponge))
        self._factor()

    def _factor(self):
        n, m = self._n, self.grid.basis.count
        ab = np.zeros((2 * KL + KU + 1, n * m))
        for l, band in enumerate(assemble_linear_operator(self.grid, self.b)):
            blk = -0.5 * self.dt * band
            blk[KU] += 1.0
            ab[KL:, l * n:(l + 1) * n] = blk
        lu, piv, info = lapack.dgbtrf(ab, KL, KU)
        if info != 0:
            raise SolverError(f"banded factorization failed (info={info}); "
                              "the closure is singular on this grid")
        self._lu, self._piv = lu, piv

    def reset(self):
        self._prev_nl = None

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        """Spectral coefficients of -g'(u) u_x, dealiased in y."""
        if self.nl.is_zero:
            return np.zeros_like(coeffs)
        basis = self.grid.basis
        c = coeffs * self.mask
        u = basis.inverse(c, axis=1)
        ux = stencils.derivative(u, self.h, 1)
        n_phys = -self.nl.dg(u) * ux
        out = basis.forward(n_phys, axis=1) * self.mask
        out[0] = out[-1] = 0.0
        return out

    def forcing_coeffs(self, t: float) -> np.ndarray | None:
        if self.forcing is None:
            return None
        f = self.forcing(t, self.grid.x, self.grid.basis.nodes)
        out = self.grid.basis.forward(f, axis=1)
        out[0] = out[-1] = 0.0
        return out

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        n, m = self._n, rhs.shape[1]
        vec = np.ascontiguousarray(rhs[1:-1].T).reshape(-1)
        sol, info = lapack.dgbtrs(self._lu, KL, KU, vec, self._piv)
        if info != 0:
            raise SolverError(f"banded solve failed (info={info})")
        out = np.zeros_like(rhs)
        out[1:-1] = sol.reshape(m, n).T
        return out

    def _cn(self, c, explicit):
        rhs = c + 0.5 * self.dt * apply_linear(c, self.h, self.lam, self.b) + self.dt * explicit
        return self._solve(rhs)

    def step_coeffs(self, c: np.ndarray, t: float) -> np.ndarray:
        dt = self.dt
        f_mid = self.forcing_coeffs(t + 0.5 * dt)
        n_now = self.nonlinear(c)
        if self._prev_nl is None:
            # explicit midpoint start: N at an Euler predictor for t + dt/2
            pred = c + 0.5 * dt * (apply_linear(c, self.h, self.lam, self.b) + n_now)
            if f_mid is not None:
                pred = pred + 0.5 * dt * self.forcing_coeffs(t)
            pred[0] = pred[-1] = 0.0
            explicit = self.nonlinear(pred)
        else:
            explicit = 1.5 * n_now - 0.5 * self._prev_nl
        if f_mid is not None:
            explicit = explicit + f_mid
        new = self._cn(c, explicit)
        if self._damp is not None:
            new = new * self._damp[:, None]
        self._prev_nl = n_now
        if not np.all(np.isfinite(new)):
            raise BlowUpError(f"non-finite values after step at t={t + dt:.6g}")
        return new

    def step(self, state: Field, t: float) -> Field:
        return state.with_coeffs(self.step_coeffs(state.coeffs, t))


def step(state: Field, t: float, dt: float, nl: Nonlinearity, forcing=None, b: float = 0.0,
         stepper: Stepper | None = None) -> Field:
    """One IMEX step; pass a persistent ``stepper`` to keep the AB2 history."""
    if stepper is None:
        stepper = Stepper(state.grid, b=b, nl=nl, forcing=forcing, dt=dt)
    return stepper.step(state, t)


def truncate_data(values: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """u0 * eta(1/h - x), the cut-off used with the regularized problem."""
    if h <= 0:
        return values
    return values * eta(1.0 / h - x)[:, None]


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Diagnostics records, optional field snapshots and the final state."""

    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, Field)
    final: Field | None = None
    t_final: float = 0.0
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def series(self, column: str) -> np.ndarray:
        """One record column (e.g. "mass", "weighted_mass:exp") as an array."""
        if column == "t":
            return np.array([r.t for r in self.records])
        kind, _, key = column.partition(":")
        out = []
        for r in self.records:
            if key:
                out.append(getattr(r, kind)[key])
            else:
                out.append(getattr(r, kind))
        return np.array(out, dtype=float)


def integrate(grid: Grid, u0: Field, *, b: float = 0.0, nl: Nonlinearity | None = None,
              forcing=None, T: float | None = None, cadence: int = 100, weights=None,
              lambda_fields=(), store_every: int = 0, sponge: float = 0.0, strong: bool = True,
              on_record=None) -> Trajectory:
    """Advance ``u0`` to ``T`` recording diagnostics every ``cadence`` steps.

    ``store_every`` > 0 keeps a field snapshot at every that-many-th record.
    A blow-up ends the run early with ``status = "blowup"`` and the partial
    trajectory intact.
    """
    from . import diagnostics as D

    T = grid.T if T is None else float(T)
    nl = nl or Nonlinearity("none")
    nsteps = int(round(T / grid.dt))
    if abs(nsteps * grid.dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a multiple of dt")
    stepper = Stepper(grid, b=b, nl=nl, forcing=forcing, sponge=sponge)
    acc = {name: D.LambdaPlus(name) for name in lambda_fields}
    traj = Trajectory()

    def emit(c, t, k):
        st = u0.with_coeffs(c)
        rec = D.make_record(st, t, weights, nl, acc, strong=strong)
        traj.records.append(rec)
        if store_every and (k % store_every == 0):
            traj.snapshots.append((t, st))
        if on_record is not None:
            on_record(rec)

    c = np.array(u0.coeffs)
    emit(c, 0.0, 0)
    nrec = 0
    t = 0.0
    for n in range(nsteps):
        try:
            c = stepper.step_coeffs(c, t)
        except BlowUpError as exc:
            traj.status, traj.message = "blowup", str(exc)
            log.warning("%s", exc)
            break
        t = (n + 1) * grid.dt
        if (n + 1) % cadence == 0 or n + 1 == nsteps:
            st = u0.with_coeffs(c)
            span = cadence * grid.dt if (n + 1) % cadence == 0 else (nsteps % cadence) * grid.dt
            acc = {k: a.update(st, span) for k, a in acc.items()}
            nrec += 1
            emit(c, t, nrec)
    traj.final = u0.with_coeffs(c)
    traj.t_final = t
    return traj


def prepare_initial(cfg, grid: Grid) -> Field:
    from .data import initial_values
    vals = initial_values(grid, cfg.initial)
    if cfg.truncate_data and cfg.h > 0:
        vals = truncate_data(vals, grid.x, cfg.h)
    return Field.from_values(grid, vals)


def prepare_forcing(cfg, grid: Grid):
    from .data import forcing_sampler
    f = forcing_sampler(grid, cfg.forcing)
    if f is None or not (cfg.truncate_data and cfg.h > 0):
        return f
    cut = eta(1.0 / cfg.h - grid.x)

    def truncated(t, x, y, _f=f):
        vals = _f(t, x, y)
        return vals * np.interp(np.asarray(x, dtype=float), grid.x, cut)[..., None]
    return truncated


def run(cfg, on_record=None) -> Trajectory:
    """Integrate a validated :class:`~kzk.config.RunConfig` from 0 to T."""
    grid = cfg.build_grid()
    u0 = prepare_initial(cfg, grid)
    return integrate(grid, u0, b=cfg.b, nl=cfg.build_nonlinearity(),
                     forcing=prepare_forcing(cfg, grid), T=cfg.T, cadence=cfg.cadence,
                     weights=cfg.weights, lambda_fields=cfg.lambda_plus,
                     store_every=cfg.store_fields, sponge=cfg.sponge, on_record=on_record)


# ---------------------------------------------------------------------------
# compatibility functions Phi_j
# ---------------------------------------------------------------------------

def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at z on nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def _derivative_matrix(x: np.ndarray, order: int, width: int) -> np.ndarray:
    """Dense matrix of d^order/dx^order using ``width``-point Fornberg stencils."""
    n = len(x)
    D = np.zeros((n, n))
    half = width // 2
    for i in range(n):
        lo = min(max(0, i - half), n - width)
        idx = np.arange(lo, lo + width)
        D[i, idx] = fornberg_weights(x[i], x[idx], order)[:, order]
    return D


@dataclass
class CompatibilityReport:
    trace: list = field(default_factory=list)      # max_y |Phi_j(0, y)|
    trace_x: list = field(default_factory=list)    # max_y |d_x Phi_j(0, y)|
    interior: list = field(default_factory=list)   # max |Phi_j| over the grid
    resolved: bool = True


def compatibility_check(u0: Field, forcing=None, j_max: int = 1, b: float = 0.0,
                        dt_probe: float = 1e-4) -> CompatibilityReport:
    """Traces at x = 0 of Phi_0 = u0, Phi_j = d_t^{j-1} f(0) + (d5 - d3 - dx dyy - b dx) Phi_{j-1}.

    x-derivatives use 8-point one-sided/centred Fornberg stencils on the full
    grid; time derivatives of f use central differences with step ``dt_probe``.
    """
    grid = u0.grid
    x = grid.x
    lam = np.asarray(grid.basis.eigenvalues)
    width = 8
    if 5 * j_max + 1 + 2 > grid.nx // 4 or j_max > 2:
        rep = CompatibilityReport(resolved=False)
        log.warning("j_max=%d too large for nx=%d; traces are unreliable", j_max, grid.nx)
    else:
        rep = CompatibilityReport()
    D = {k: _derivative_matrix(x, k, width) for k in (1, 3, 5)}
    phi = np.array(u0.coeffs)

    def record(c):
        vals = grid.basis.inverse(c, axis=1)
        dx_vals = grid.basis.inverse(D[1] @ c, axis=1)
        rep.trace.append(float(np.max(np.abs(vals[0]))))
        rep.trace_x.append(float(np.max(np.abs(dx_vals[0]))))
        rep.interior.append(float(np.max(np.abs(vals))))

    record(phi)
    for j in range(1, j_max + 1):
        nxt = D[5] @ phi - D[3] @ phi + (lam - b) * (D[1] @ phi)
        if forcing is not None:
            nxt = nxt + _time_derivative_coeffs(grid, forcing, j - 1, dt_probe)
        phi = nxt
        record(phi)
    return rep


def _time_derivative_coeffs(grid: Grid, forcing, order: int, dt: float) -> np.ndarray:
    def fc(t):
        return grid.basis.forward(forcing(t, grid.x, grid.basis.nodes), axis=1)
    if order == 0:
        return fc(0.0)
    pts = np.arange(-order, order + 1) * dt
    w = fornberg_weights(0.0, pts, order)[:, order]
    return sum(wi * fc(t) for wi, t in zip(w, pts))


# ---------------------------------------------------------------------------
# periodic-in-x verification mode
# ---------------------------------------------------------------------------

class PeriodicStepper:
    """Same IMEX scheme on a periodic x-box with Fourier derivatives.

    Used to check the conservation laws, which hold exactly only without the
    x = 0 boundary.  x is [x_left, x_left + 2 X_box) with ``nx`` points.
    """

    def __init__(self, basis: EigenBasis, x_half_width: float, nx: int, dt: float,
                 b: float = 0.0, nl: Nonlinearity | None = None, x_left: float = 0.0):
        self.basis = basis
        self.length = 2.0 * x_half_width
        self.nx = nx
        self.dt = dt
        self.b = b
        self.nl = nl or Nonlinearity("none")
        self.x = x_left + self.length * np.arange(nx) / nx
        self.xi = 2 * np.pi * np.fft.rfftfreq(nx, d=self.length / nx)
        lam = np.asarray(basis.eigenvalues)
        self.omega = (self.xi ** 5 + self.xi ** 3)[:, None] + self.xi[:, None] * (lam[None, :] - b)
        z = 0.5 * dt * 1j * self.omega
        self._num = 1.0 + z
        self._den = 1.0 - z
        kmax = int(np.floor(nx / 3))  # 2/3 rule in x
        self.xmask = (np.arange(self.xi.size) <= kmax).astype(float)
        self.ymask = basis.dealias_mask(self.nl.dealias_fraction)
        self._prev = None

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(self.basis.forward(values, axis=1), axis=0)

    def to_physical(self, spec: np.ndarray) -> np.ndarray:
        return self.basis.inverse(np.fft.irfft(spec, n=self.nx, axis=0), axis=1)

    def nonlinear(self, spec: np.ndarray) -> np.ndarray:
        if self.nl.is_zero:
            return np.zeros_like(spec)
        s = spec * self.xmask[:, None] * self.ymask[None, :]
        u = self.to_physical(s)
        ux = self.to_physical(1j * self.xi[:, None] * s)
        return self.to_spectral(-self.nl.dg(u) * ux) * self.xmask[:, None] * self.ymask[None, :]

    def step(self, spec: np.ndarray) -> np.ndarray:
        dt = self.dt
        n_now = self.nonlinear(spec)
        if self._prev is None:
            pred = spec + 0.5 * dt * (1j * self.omega * spec + n_now)
            explicit = self.nonlinear(pred)
        else:
            explicit = 1.5 * n_now - 0.5 * self._prev
        self._prev = n_now
        new = (self._num * spec + dt * explicit) / self._den
        if not np.all(np.isfinite(new)):
            raise BlowUpError("non-finite values in periodic verification run")
        return new
