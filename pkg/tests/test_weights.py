"""Closed-form weights, their derivatives and the admissibility checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kzk import weights as W


ALL_KINDS = [W.exponential(0.1), W.exponential(0.5), W.power(0.5), W.power(1.0),
             W.rho0(), W.rho0_shifted(2.0), W.unit()]


class TestEval:
    """Point values and error handling of eval_weight."""

    def test_exponential_at_zero(self):
        assert W.eval_weight(W.exponential(0.5), 0.0) == pytest.approx(1.0)

    def test_rho0_at_zero(self):
        assert W.eval_weight(W.rho0(), 0.0) == pytest.approx(1.0)

    def test_power_derivative(self):
        assert W.eval_weight(W.power(1.0), 1.0, 1) == pytest.approx(4.0)
        h = 1e-4
        fd = (W.eval_weight(W.power(1.0), 1 + h) - W.eval_weight(W.power(1.0), 1 - h)) / (2 * h)
        assert fd == pytest.approx(4.0, rel=1e-8)

    def test_closed_forms(self):
        x = np.linspace(0, 5, 11)
        np.testing.assert_allclose(W.eval_weight(W.exponential(0.3), x), np.exp(0.6 * x))
        np.testing.assert_allclose(W.eval_weight(W.power(0.75), x), (1 + x) ** 1.5)
        np.testing.assert_allclose(W.eval_weight(W.rho0(), x), 1 + 2 / np.pi * np.arctan(x))

    def test_rejects_negative_x(self):
        with pytest.raises(ValueError):
            W.eval_weight(W.unit(), -0.1)

    def test_rejects_high_order(self):
        with pytest.raises(ValueError):
            W.eval_weight(W.unit(), 1.0, 6)

    @pytest.mark.parametrize("w", ALL_KINDS, ids=lambda w: w.name)
    @pytest.mark.parametrize("j", range(5))
    def test_derivatives_match_finite_differences(self, w, j):
        x = np.linspace(0.5, 6.0, 23)
        h = 1e-4
        fd = (W.eval_weight(w, x + h, j) - W.eval_weight(w, x - h, j)) / (2 * h)
        exact = W.eval_weight(w, x, j + 1)
        # sup-norm relative error; pointwise is ill-posed at roots of psi^(j+1)
        scale = max(np.max(np.abs(exact)), 1e-12)
        assert np.max(np.abs(fd - exact)) / scale <= 1e-6

    def test_one_sided_at_origin(self):
        w = W.rho0()
        h = 1e-4
        fd = (-3 * W.eval_weight(w, 0.0) + 4 * W.eval_weight(w, h) - W.eval_weight(w, 2 * h)) / (2 * h)
        assert fd == pytest.approx(W.eval_weight(w, 0.0, 1), rel=1e-6)

    @given(st.floats(0.01, 2.0), st.floats(0.0, 30.0))
    @settings(max_examples=50, deadline=None)
    def test_positive(self, alpha, x):
        for w in (W.exponential(alpha), W.power(alpha), W.rho0()):
            assert W.eval_weight(w, x) > 0

    def test_log_weight_matches(self):
        x = np.linspace(0, 10, 7)
        for w in ALL_KINDS:
            np.testing.assert_allclose(W.log_weight(w, x), np.log(W.eval_weight(w, x)), rtol=1e-12,
                                       atol=1e-14)


class TestDerivativeWeight:
    """psi' as a weight in its own right."""

    def test_exponential(self):
        d = W.derivative_weight(W.exponential(0.5))
        x = np.linspace(0, 4, 9)
        np.testing.assert_allclose(W.eval_weight(d, x), np.exp(x))

    def test_rho0(self):
        d = W.derivative_weight(W.rho0())
        x = np.linspace(0, 4, 9)
        np.testing.assert_allclose(W.eval_weight(d, x), (2 / np.pi) / (1 + x * x))

    def test_power(self):
        d = W.derivative_weight(W.power(1.0))
        x = np.linspace(0, 4, 9)
        np.testing.assert_allclose(W.eval_weight(d, x), 2 * (1 + x))

    @pytest.mark.parametrize("w", [W.exponential(0.2), W.power(2.0), W.rho0()])
    def test_equals_first_derivative(self, w):
        x = np.linspace(0, 8, 17)
        assert np.array_equal(W.eval_weight(W.derivative_weight(w), x), W.eval_weight(w, x, 1))

    def test_rejects_unit(self):
        with pytest.raises(ValueError):
            W.derivative_weight(W.unit())

    def test_rejects_slow_power(self):
        with pytest.raises(ValueError):
            W.derivative_weight(W.power(0.5))


class TestAdmissibility:
    """Empirical derivative and shift constants."""

    def test_exponential_half(self):
        rep = W.check_admissibility(W.exponential(0.5))
        assert rep.passed
        assert rep.c[0] == pytest.approx(1.0)
        assert rep.c_shift == pytest.approx(math.e, rel=1e-9)

    def test_unit(self):
        rep = W.check_admissibility(W.unit())
        assert rep.passed
        assert rep.c == (0.0,) * 5
        assert rep.c_shift == pytest.approx(1.0)

    def test_rho0(self):
        rep = W.check_admissibility(W.rho0(), x_max=50.0)
        assert rep.passed
        x = np.linspace(0, 50, 200001)
        ref = np.max((2 / np.pi) / ((1 + x * x) * (1 + 2 / np.pi * np.arctan(x))))
        assert rep.c[0] == pytest.approx(ref, rel=1e-3)
        assert rep.c[0] == pytest.approx(2 / np.pi, rel=1e-3)

    @pytest.mark.parametrize("w", [W.exponential(a) for a in (0.1, 0.5, 1.0)]
                             + [W.power(a) for a in (0.5, 1.0, 2.0)] + [W.rho0(), W.unit()],
                             ids=lambda w: w.name)
    def test_standard_kinds_pass(self, w):
        assert W.check_admissibility(w).passed

    def test_preconditions(self):
        with pytest.raises(ValueError):
            W.check_admissibility(W.unit(), x_max=0.5)
        with pytest.raises(ValueError):
            W.check_admissibility(W.unit(), n_samples=10)


class TestHypotheses:
    """Uniqueness and growth conditions sampled on a grid."""

    def test_exponential_weak(self):
        rep = W.check_theorem_hypotheses(W.exponential(1.0), p=1.0)
        assert rep.weak_uniqueness_ok
        assert rep.weak_c0 == pytest.approx(32.0, rel=1e-9)

    def test_power_five_eighths(self):
        rep = W.check_theorem_hypotheses(W.power(5 / 8), p=1.0)
        assert rep.weak_uniqueness_ok and rep.weak_c0 > 0

    def test_power_quarter_fails(self):
        rep = W.check_theorem_hypotheses(W.power(0.25), p=2.0)
        assert not rep.weak_uniqueness_ok

    def test_growth(self):
        assert W.check_theorem_hypotheses(W.exponential(0.1), p=1.0).growth_ok
        assert W.check_theorem_hypotheses(W.power(1.0), p=1.0).growth_n == 1

    def test_p_range(self):
        with pytest.raises(ValueError):
            W.check_theorem_hypotheses(W.exponential(1.0), p=3.0)
