"""Banded IMEX solver, boundary trace and compatibility functions."""

import numpy as np
import pytest

from kzk import stencils
from kzk.eigenbasis import build_basis
from kzk.grid import Field, Grid
from kzk.nonlinearity import Nonlinearity, eta
from kzk.solver import (PeriodicStepper, Stepper, apply_linear, assemble_linear_operator,
                        boundary_trace_mu2, compatibility_check, integrate, step,
                        truncate_data)

from conftest import bump_field


def interior(grid):
    return slice(1, grid.nx - 1)


class TestLinearOperator:
    """Stencil assembly and its consistency with the band matrix."""

    def test_band_matches_apply(self, small_grid):
        rng = np.random.default_rng(0)
        c = rng.normal(size=(small_grid.nx, small_grid.basis.count))
        c[0] = c[-1] = 0.0
        bands = assemble_linear_operator(small_grid, b=0.7)
        Mu = apply_linear(c, small_grid.dx, small_grid.basis.eigenvalues, 0.7)
        for l, ab in enumerate(bands):
            dense = stencils.banded_to_dense(ab)
            np.testing.assert_allclose(dense @ c[1:-1, l], Mu[1:-1, l], rtol=1e-10,
                                       atol=1e-8 * np.max(np.abs(Mu[:, l])))

    def test_bandwidth(self, small_grid):
        ab = assemble_linear_operator(small_grid, 0.0)[0]
        assert ab.shape[0] == 7

    def test_quintic_modified_equation(self):
        """Second-order stencils are exact on quintics up to their known h^2, h^4 terms."""
        grid = Grid(10.0, 101, build_basis("a", 1.0, 1))
        x, h = grid.x, grid.dx
        lam, b = grid.basis.eigenvalues[0], 0.3
        p = 0.01 * x ** 5 - 0.2 * x ** 4 + x ** 3 - x ** 2 + 2 * x
        p1 = 0.05 * x ** 4 - 0.8 * x ** 3 + 3 * x ** 2 - 2 * x + 2
        p3 = 0.6 * x ** 2 - 4.8 * x + 6
        p5 = 1.2
        exact = (p5 - (p3 + h ** 2 / 4 * p5)
                 + (lam - b) * (p1 + h ** 2 / 6 * p3 + h ** 4 / 120 * p5))
        out = apply_linear(p[:, None], h, grid.basis.eigenvalues, b)[:, 0]
        # rows whose stencil stays off the ghost layers and the zeroed end value
        np.testing.assert_allclose(out[4:-4], exact[4:-4], rtol=1e-9, atol=1e-8)

    def test_drift_cancels(self):
        grid = Grid(10.0, 101, build_basis("a", np.pi, 1))
        u = np.sin(grid.x)[:, None] * np.exp(-((grid.x - 5) ** 2))[:, None]
        b = grid.basis.eigenvalues[0]
        with_drift = apply_linear(u, grid.dx, grid.basis.eigenvalues, b)
        h = grid.dx
        ext = stencils.extend(u)
        pure = (stencils.apply(ext, stencils.D5, h, 5, 1, grid.nx - 1)
                - stencils.apply(ext, stencils.D3, h, 3, 1, grid.nx - 1))
        np.testing.assert_allclose(with_drift[1:-1], pure, atol=1e-12)

    def test_second_order_on_smooth_wave(self):
        k, b, lam = 2.0, 0.5, 3.0
        errs = []
        for nx in (201, 401, 801):
            x = np.linspace(0, 20, nx)
            env = np.exp(-((x - 10) / 6) ** 16)
            u = (np.sin(k * x) * env)[:, None]
            out = apply_linear(u, x[1] - x[0], np.array([lam]), b)[:, 0]
            mid = np.abs(x - 10) < 2.0  # envelope flat to 1e-8 here
            exact = (k ** 5 + k ** 3 + (lam - b) * k) * np.cos(k * x)
            errs.append(np.max(np.abs(out[mid] - exact[mid])) / np.max(np.abs(exact[mid])))
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        assert all(3.6 < r < 4.4 for r in ratios), (errs, ratios)

    def test_too_small_grid(self):
        with pytest.raises(ValueError):
            stencils.banded_operator(7, 0.1, 0.0, 0.0)


class TestStep:
    """One-step behaviour of the IMEX scheme."""

    def test_zero_fixed_point(self, small_grid):
        st = Field.zeros(small_grid)
        stepper = Stepper(small_grid, nl=Nonlinearity("quadratic"))
        for k in range(20):
            st = stepper.step(st, k * small_grid.dt)
        assert np.all(st.coeffs == 0.0)

    def test_module_step(self, small_grid):
        u = bump_field(small_grid, amplitude=0.1)
        a = step(u, 0.0, small_grid.dt, Nonlinearity("quadratic"))
        b = Stepper(small_grid, nl=Nonlinearity("quadratic")).step(u, 0.0)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_boundary_rows_zero(self, small_grid):
        u = bump_field(small_grid, amplitude=0.1)
        u1 = Stepper(small_grid, nl=Nonlinearity("quadratic")).step(u, 0.0)
        assert np.all(u1.coeffs[0] == 0) and np.all(u1.coeffs[-1] == 0)

    def test_linear_mass_nonincreasing_to_second_order(self):
        """Per-step mass growth is a boundary-closure error that shrinks like dx^2."""
        from kzk.diagnostics import mass
        worst = []
        for nx in (201, 401):
            grid = Grid(20.0, nx, build_basis("a", 1.0, 2), dt=1e-3)
            st = bump_field(grid, center=6.0)
            stepper = Stepper(grid)
            m0 = m_prev = mass(st)
            w = 0.0
            for k in range(400):
                st = stepper.step(st, k * grid.dt)
                m = mass(st)
                w = max(w, (m - m_prev) / m0)
                assert m <= m0 * (1 + 1e-6)
                m_prev = m
            worst.append(w)
        assert worst[1] <= 1e-6
        assert worst[1] <= worst[0] / 3.0

    def test_operator_eigenvalues_stable(self):
        M = stencils.banded_to_dense(stencils.banded_operator(201, 0.1, np.pi ** 2, 0.0))
        assert np.linalg.eigvals(M).real.max() < 0

    def test_cutoff_nonlinearity(self):
        nl = Nonlinearity("quadratic", h=1.0)
        u = np.array([-3.0, -2.0, 2.0, 2.5, 3.0])
        np.testing.assert_array_equal(nl.dg(u), 0.0)
        assert nl.dg(np.array([0.5]))[0] == pytest.approx(0.5)

    def test_cutoff_in_solver(self, small_grid):
        vals = np.zeros((small_grid.nx, small_grid.basis.n_nodes))
        vals[:] = 3.0 * np.exp(-((small_grid.x - 10) / 3.0) ** 2)[:, None]
        stepper = Stepper(small_grid, nl=Nonlinearity("quadratic", h=1.0))
        u = Field.from_values(small_grid, vals)
        n_phys = small_grid.basis.inverse(stepper.nonlinear(u.coeffs), axis=1)
        big = np.abs(small_grid.x - 10) < 0.5
        # mask aliasing aside, the source is tiny where |u| >= 2
        assert np.max(np.abs(n_phys[big])) < 0.05 * np.max(np.abs(n_phys))

    def test_temporal_second_order(self):
        grid = Grid(20.0, 201, build_basis("a", 1.0, 2), dt=0.02, T=0.4)
        u0 = bump_field(grid, center=12.0, width=1.5, amplitude=0.5)
        nl = Nonlinearity("quadratic")

        def final(dt):
            g = Grid(20.0, 201, grid.basis, dt=dt, T=0.4)
            return integrate(g, Field(g, u0.coeffs), nl=nl, cadence=10 ** 6).final.coeffs

        ref = final(0.02 / 16)
        e1 = np.linalg.norm(final(0.02) - ref)
        e2 = np.linalg.norm(final(0.01) - ref)
        assert 3.0 < e1 / e2 < 5.0

    def test_y_shift_equivariance_periodic_family(self):
        basis = build_basis("d", 1.0, 7)
        grid = Grid(20.0, 201, basis, dt=1e-3)
        x, y = grid.x, basis.nodes
        vals = 0.5 * np.exp(-((x - 10) / 1.5) ** 2)[:, None] * (
            1 + np.cos(2 * np.pi * y) + 0.5 * np.sin(4 * np.pi * y))[None, :]
        a = Field.from_values(grid, vals)
        b = Field.from_values(grid, np.roll(vals, 1, axis=1))
        sa = Stepper(grid, nl=Nonlinearity("quadratic"))
        sb = Stepper(grid, nl=Nonlinearity("quadratic"))
        for k in range(10):
            a, b = sa.step(a, k * grid.dt), sb.step(b, k * grid.dt)
        np.testing.assert_allclose(np.roll(a.values, 1, axis=1), b.values, atol=1e-10)


class TestIntegrate:
    """Trajectories, records and early termination."""

    def test_zero_horizon(self, small_grid):
        traj = integrate(small_grid, bump_field(small_grid), T=0.0)
        assert len(traj.records) == 1 and traj.records[0].t == 0.0

    def test_record_cadence(self, small_grid):
        traj = integrate(small_grid, bump_field(small_grid), T=0.05, cadence=10)
        np.testing.assert_allclose(traj.series("t"), np.arange(6) * 0.01)

    def test_zero_data(self, small_grid):
        traj = integrate(small_grid, Field.zeros(small_grid), nl=Nonlinearity("quadratic"), T=0.05,
                         cadence=10)
        assert np.all(traj.final.coeffs == 0) and np.all(traj.series("mass") == 0)

    def test_blowup_keeps_partial(self, small_grid):
        c = np.array(bump_field(small_grid).coeffs)
        c[50, 0] = np.nan
        traj = integrate(small_grid, Field(small_grid, c), T=0.05, cadence=10)
        assert traj.status == "blowup" and not traj.ok
        assert len(traj.records) == 1

    def test_snapshots(self, small_grid):
        traj = integrate(small_grid, bump_field(small_grid), T=0.04, cadence=10, store_every=2)
        assert [round(t, 12) for t, _ in traj.snapshots] == [0.0, 0.02, 0.04]

    def test_dt_multiple(self, small_grid):
        with pytest.raises(ValueError):
            integrate(small_grid, bump_field(small_grid), T=0.0105)


class TestBoundaryTrace:
    """u_xx at x = 0."""

    def test_parabola(self):
        errs = []
        for nx in (201, 401):
            grid = Grid(10.0, nx, build_basis("a", 1.0, 3))
            x = grid.x
            phi = np.array([1.0, -0.5, 0.25])
            prof = x ** 2 * (1 - eta(x - 2.0))
            st = Field(grid, np.outer(prof, phi))
            mu = boundary_trace_mu2(st)
            exact = grid.basis.inverse(2 * phi)
            errs.append(np.max(np.abs(mu - exact)))
        assert errs[1] <= errs[0] / 3.5 or errs[1] < 1e-10

    def test_zero(self, small_grid):
        assert np.all(boundary_trace_mu2(Field.zeros(small_grid)) == 0)


class TestTruncation:
    """Data cut-off u0 * eta(1/h - x)."""

    def test_cut(self):
        x = np.linspace(0, 10, 101)
        v = truncate_data(np.ones((101, 2)), x, 0.25)
        assert np.all(v[x <= 3.0] == 1.0) and np.all(v[x >= 4.0] == 0.0)

    def test_no_cut(self):
        v = np.ones((5, 2))
        assert truncate_data(v, np.arange(5.0), 0.0) is v


class TestCompatibility:
    """Traces of the compatibility functions at x = 0."""

    def test_zero(self, small_grid):
        rep = compatibility_check(Field.zeros(small_grid), j_max=2)
        assert rep.trace == [0.0] * 3 and rep.trace_x == [0.0] * 3

    def test_parabola_vanishes(self):
        grid = Grid(10.0, 401, build_basis("a", 1.0, 2))
        prof = grid.x ** 2 * (1 - eta(grid.x - 2.0))
        u0 = Field(grid, np.outer(prof, [1.0, 0.0]))
        rep = compatibility_check(u0, j_max=0)
        assert rep.trace[0] == 0.0 and rep.trace_x[0] < 1e-12

    def test_flat_beyond_one(self):
        # e^{-1/x} must be resolved near 0 for the discrete traces to vanish
        grid = Grid(4.0, 1601, build_basis("a", 1.0, 2))
        prof = eta(grid.x) * (1 - eta(grid.x - 1.5))
        u0 = Field(grid, np.outer(prof, [1.0, 0.0]))
        rep = compatibility_check(u0, j_max=1)
        assert rep.interior[1] > 1.0
        assert rep.trace[1] < 1e-6 * rep.interior[1]
        assert rep.trace_x[1] < 1e-6 * rep.interior[1]

    def test_unresolved_flag(self):
        grid = Grid(2.0, 40, build_basis("a", 1.0, 2))
        rep = compatibility_check(Field.zeros(grid), j_max=3)
        assert not rep.resolved


class TestPeriodicMode:
    """Fourier-in-x verification stepper."""

    def test_linear_mass_exact(self):
        basis = build_basis("d", 1.0, 5)
        ps = PeriodicStepper(basis, 15.0, 256, 1e-3)
        x = ps.x[:, None]
        vals = np.exp(-((x - 15) / 2) ** 2) * (1 + np.cos(2 * np.pi * basis.nodes))[None, :]
        spec = ps.to_spectral(vals)
        m0 = np.sum(ps.to_physical(spec) ** 2)
        for _ in range(200):
            spec = ps.step(spec)
        assert abs(np.sum(ps.to_physical(spec) ** 2) / m0 - 1) <= 1e-10

    def test_round_trip(self):
        basis = build_basis("a", 1.0, 3)
        ps = PeriodicStepper(basis, 5.0, 64, 1e-3)
        vals = np.random.default_rng(3).normal(size=(64, 3))
        np.testing.assert_allclose(ps.to_physical(ps.to_spectral(vals)), vals, atol=1e-12)
