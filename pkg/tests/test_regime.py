import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotcouette.regime import (
    RegimeKind,
    bradshaw_richardson,
    classify,
    growth_rate,
    instability_sets,
    rescale_slope,
    stable_eigenvalues,
)

betas = st.floats(-10, 10, allow_nan=False)
nus = st.floats(1e-6, 0.999)


class TestClassify:
    def test_half_is_most_unstable(self):
        rep = classify(0.5, 1e-3)
        assert rep.kind is RegimeKind.EXPONENTIALLY_UNSTABLE
        assert rep.b_beta == -0.25
        assert rep.instability_margin == pytest.approx(0.5 - 1e-3)
        assert rep.alpha is None

    def test_lift_up_kinds(self):
        assert classify(1.0, 0.1).kind is RegimeKind.LIFT_UP_ROTATED
        assert classify(0.0, 0.1).kind is RegimeKind.LIFT_UP_CLASSICAL

    def test_stable(self):
        rep = classify(2.0, 0.01)
        assert rep.kind is RegimeKind.STABLE
        assert rep.alpha == pytest.approx(1.4142136, abs=1e-7)
        assert rep.c_beta == pytest.approx(math.sqrt(5 / 2))

    def test_negative_beta_is_stable(self):
        assert classify(-1.0, 0.1).kind is RegimeKind.STABLE

    @pytest.mark.parametrize("nu", [0.0, 1.0, -0.1, 2.0])
    def test_rejects_nu(self, nu):
        with pytest.raises(ValueError):
            classify(0.5, nu)

    def test_lines(self):
        lines = classify(0.0, 0.5).as_lines()
        assert "kind=LiftUpClassical" in lines
        assert "b_beta=0.0" in lines
        assert "alpha=undefined" in lines

    @given(betas)
    def test_b_bounded_below(self, beta):
        b = bradshaw_richardson(beta)
        assert b >= -0.25
        if beta != 0.5:
            assert b > -0.25 or abs(beta - 0.5) < 1e-7


class TestGrowthRate:
    def test_figure_point(self):
        assert growth_rate(0.5, 1e-3, 0.0, 2) == pytest.approx(0.496, rel=1e-14)

    def test_no_coupling_at_l_zero(self):
        assert growth_rate(0.3, 1e-2, 4.0, 0) == pytest.approx(-0.16)

    def test_decays_at_large_eta(self):
        assert growth_rate(0.5, 1e-3, 30.0, 2) < 0

    def test_errors(self):
        with pytest.raises(ValueError):
            growth_rate(0.5, 1e-3, 0.0, 0)
        with pytest.raises(ValueError):
            growth_rate(2.0, 1e-3, 1.0, 1)

    @given(st.floats(0.01, 0.99), nus, st.floats(-50, 50), st.integers(1, 20))
    def test_even(self, beta, nu, eta, l):
        r = growth_rate(beta, nu, eta, l)
        assert growth_rate(beta, nu, -eta, l) == r
        assert growth_rate(beta, nu, eta, -l) == r

    @given(st.floats(0.01, 0.99), st.floats(1e-6, 0.5), st.floats(-50, 50), st.integers(1, 20))
    def test_decreasing_in_nu(self, beta, nu, eta, l):
        assert growth_rate(beta, 1.5 * nu, eta, l) < growth_rate(beta, nu, eta, l)


class TestStableEigenvalues:
    def test_hand_value(self):
        lp, lm = stable_eigenvalues(2.0, 0.01, 0.0, 1)
        assert lp == pytest.approx(complex(-0.01, math.sqrt(2)))
        assert lm == pytest.approx(complex(-0.01, -math.sqrt(2)))

    def test_l_zero_dissipative(self):
        lp, lm = stable_eigenvalues(3.0, 0.02, 5.0, 0)
        assert lp == lm == complex(-0.5, 0.0)

    def test_inviscid_oscillatory(self):
        lp, _ = stable_eigenvalues(-1.0, 0.0, 1.0, 1)
        assert lp.real == 0.0
        assert lp.imag == pytest.approx(math.sqrt(2) / math.sqrt(2))

    def test_wrong_regime(self):
        with pytest.raises(ValueError):
            stable_eigenvalues(0.5, 0.01, 1.0, 1)
        with pytest.raises(ValueError):
            stable_eigenvalues(2.0, 0.01, 0.0, 0)

    @given(st.floats(1.01, 10), nus, st.floats(-20, 20), st.integers(1, 10))
    def test_conjugate_pair(self, beta, nu, eta, l):
        lp, lm = stable_eigenvalues(beta, nu, eta, l)
        assert lp == lm.conjugate()
        assert lp.real == -nu * (eta * eta + l * l)
        assert lp.real < 0


class TestInstabilitySets:
    def test_contains_figure_point(self):
        sets = instability_sets(0.5, 1e-3, [0.0, 1.0, 30.0], 2)
        modes = {(m.eta, m.l): m for m in sets.s_members}
        assert (0.0, 2) in modes
        assert (30.0, 2) not in modes

    def test_s_prime_subset(self):
        sets = instability_sets(0.3, 0.05, [i * 0.25 for i in range(-40, 41)], 6)
        assert sets.s_prime_members <= sets.s_members
        assert sets.s_members

    def test_empty_when_viscous(self):
        beta = 0.5
        nu = 0.6  # exceeds sqrt(beta (1 - beta))
        sets = instability_sets(beta, nu, [float(i) for i in range(-5, 6)], 5)
        assert not sets.s_members and not sets.s_prime_members

    def test_origin_skipped(self):
        sets = instability_sets(0.5, 1e-3, [0.0], 0)
        assert not sets.rates


class TestRescale:
    def test_identity(self):
        assert rescale_slope(2.0, 0.01, 1.0) == (2.0, 0.01)

    def test_steep_shear_destabilizes(self):
        b, n = rescale_slope(2.0, 0.01, 4.0)
        assert (b, n) == (0.5, 0.0025)
        assert classify(b, n).kind is RegimeKind.EXPONENTIALLY_UNSTABLE

    def test_negative_beta(self):
        b, n = rescale_slope(-1.0, 0.1, 2.0)
        assert (b, n) == (-0.5, 0.05)
        assert classify(b, n).kind is RegimeKind.STABLE
        assert classify(b, n).b_beta == 0.75

    def test_zero_sigma(self):
        with pytest.raises(ValueError):
            rescale_slope(1.0, 0.1, 0.0)

    @given(betas, st.floats(0.5, 10) | st.floats(-10, -0.5))
    def test_b_of_rescaled(self, beta, sigma):
        b, _ = rescale_slope(beta, 0.01, sigma)
        assert bradshaw_richardson(b) == (beta / sigma) * (beta / sigma - 1.0) + 0.0
