"""Experiment drivers on shortened runs."""

import dataclasses
import json
import math

import numpy as np
import pytest

from kzk.config import load_preset
from kzk.experiments import (calibrate_epsilon0, decay_trajectory, decay_verdict, run_conservation_drift,
                             run_continuous_dependence, run_decay, run_oracle_convergence,
                             run_preset)


def short(name, **over):
    cfg = load_preset(name)
    return dataclasses.replace(cfg, **over)


class TestDecay:
    """Gate, zero data and a short weighted-mass fit."""

    def test_gate_rejects_large_L(self, tmp_path):
        cfg = short("decay_weak", b=1.0, L=1.0, T=0.01)
        v = run_decay(cfg, tmp_path)
        assert not v.ran and not v.passed and any("L0" in s for s in v.violations)
        saved = json.loads((tmp_path / "verdict.json").read_text())
        assert saved["ran"] is False and not (tmp_path / "diagnostics.csv").exists()

    def test_gate_accepts_small_L(self):
        cfg = short("decay_weak", b=1.0, L=0.5, T=0.02, nx=201, X_max=10.0, ny_modes=4,
                    cadence=10)
        v = run_decay(cfg)
        assert v.gate_ok and v.ran and not v.passed and "no rate fit" in v.note

    def test_zero_data(self):
        cfg = short("decay_weak", T=0.05, nx=201, X_max=10.0, ny_modes=4, cadence=10,
                    initial={"kind": "zero"})
        v = run_decay(cfg)
        assert v.passed and v.rate is None and "zero data" in v.note

    def test_threshold_formula(self):
        cfg = short("decay_weak", T=0.0)
        v = decay_verdict(cfg, None)
        assert v.beta == pytest.approx(math.pi ** 2 / (10 * cfg.L ** 2))
        assert v.threshold == pytest.approx(0.8 * v.alpha * v.beta)

    def test_short_fit_decays(self):
        cfg = short("decay_weak", T=2.0, nx=301, X_max=15.0, ny_modes=8, cadence=50)
        traj = decay_trajectory(cfg)
        v = decay_verdict(cfg, traj)
        wm = traj.series("weighted_mass:decay")
        assert traj.ok and wm[-1] < wm[0]
        assert v.rate is not None and v.rate > 0

    def test_calibration_cached(self):
        cfg = short("decay_weak", T=0.1, nx=121, X_max=6.0, ny_modes=2, cadence=10,
                    nonlinearity="none")
        a = calibrate_epsilon0(cfg, steps=1, horizon=0.1)
        assert calibrate_epsilon0(cfg, steps=1, horizon=0.1) == a
        assert 0.0 <= a <= 1.0


class TestContinuousDependence:
    """Lipschitz ratio of solution differences."""

    def test_linear_ratio_exact(self):
        cfg = short("continuous_dependence", nonlinearity="none", T=0.1, nx=301, X_max=15.0,
                    ny_modes=4, cadence=10)
        v = run_continuous_dependence(cfg, deltas=(1e-2, 1e-3, 1e-4))
        assert max(v.ratios) - min(v.ratios) < 1e-10 * max(v.ratios)
        assert v.passed

    def test_zero_perturbation(self):
        cfg = short("continuous_dependence", T=0.01, nx=201, X_max=10.0, ny_modes=4)
        v = run_continuous_dependence(cfg, deltas=(0.0,))
        assert v.differences == [0.0] and not v.passed

    def test_deterministic(self):
        cfg = short("continuous_dependence", T=0.05, nx=201, X_max=10.0, ny_modes=4,
                    cadence=10)
        a = run_continuous_dependence(cfg)
        b = run_continuous_dependence(cfg)
        assert a.differences == b.differences


class TestConservation:
    """Periodic-box functionals."""

    def test_linear_mass_exact(self):
        cfg = short("conservation_drift", nonlinearity="none", T=0.1)
        v = run_conservation_drift(cfg)
        assert v.mass_drift <= 1e-10 and v.energy_drift <= 1e-10

    def test_writes_series(self, tmp_path):
        cfg = short("conservation_drift", T=0.05)
        v = run_conservation_drift(cfg, tmp_path)
        assert v.passed
        assert (tmp_path / "conservation.csv").exists() and (tmp_path / "verdict.json").exists()

    def test_tolerance_override(self):
        cfg = short("conservation_drift", T=0.05)
        assert not run_conservation_drift(cfg, mass_tol=0.0, energy_tol=0.0).passed


class TestOracleConvergence:
    """Solver against the exact linear propagator."""

    def test_no_refinement(self):
        cfg = short("oracle_convergence", T=0.05)
        v = run_oracle_convergence(cfg, refinements=0)
        assert len(v.errors) == 1 and v.orders == []
        assert v.baseline_error == v.errors[0] < 1e-2


class TestDispatch:
    def test_unknown(self):
        cfg = short("baseline", experiment={"preset": "bogus"})
        with pytest.raises(ValueError):
            run_preset(cfg)

    def test_routes(self):
        cfg = short("conservation_drift", T=0.01)
        assert type(run_preset(cfg)).__name__ == "ConservationVerdict"
