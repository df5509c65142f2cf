import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobspill.bias import (
    CurveDgp,
    LinearBiasSetting,
    McOlsConfig,
    TauMoments,
    additive_error_check,
    curve_gap_table,
    general_omega_bias,
    lambda_naive_gap,
    mc_naive_slope,
    mc_ols_omega,
    mc_star_slope,
    measurement_error_bias,
    measurement_error_xi,
    naive_curve_gap,
    naive_slope,
    scalar_misspec_bias,
    scalar_misspec_table,
    true_effect,
    unbiasedness_factor,
    weighted_slope_star,
    xi_table,
)
from mobspill.distributions import Dist, parse_dist
from mobspill.errors import DegenerateDenominator, InsufficientDraws, ParseError

UNIFORM01 = Dist("uniform", (0.0, 1.0))


class TestNaiveSlope:
    def test_perfect_correlation_unbiased(self):
        s = LinearBiasSetting(tau=0.6, rho=1.0, beta_w=1.3, beta_g=0.4)
        assert naive_slope(s) == pytest.approx(true_effect(s), abs=1e-14)

    def test_all_home_time(self):
        s = LinearBiasSetting(tau=1.0, rho=0.3, beta_w=1.7, beta_g=0.2)
        assert naive_slope(s) == pytest.approx(1.7)

    def test_worked_example_and_oracle(self):
        s = LinearBiasSetting(tau=0.8, rho=0.5, beta_w=1.0, beta_g=2.0)
        assert naive_slope(s) == pytest.approx(1.0)
        assert true_effect(s) == pytest.approx(1.2)
        mc = mc_naive_slope(s, n=100_000, reps=12, seed=0)
        assert abs(mc.value - naive_slope(s)) < 3.0 * mc.se

    def test_underestimates_on_grid(self):
        # shared-sign effects and imperfect correlation: home-only analysis
        # understates the total effect
        for tau in (0.2, 0.5, 0.8):
            for rho in (-0.5, 0.0, 0.5, 0.9):
                for bw, bg in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.3)):
                    s = LinearBiasSetting(tau=tau, rho=rho, beta_w=bw, beta_g=bg)
                    assert naive_slope(s) < true_effect(s)


class TestWeightedSlopeStar:
    def test_half_time_unbiased_any_rho(self):
        for rho in (-0.9, -0.3, 0.0, 0.4, 0.99):
            s = LinearBiasSetting(tau=0.5, rho=rho, beta_w=1.0, beta_g=3.0)
            assert weighted_slope_star(s) == pytest.approx(true_effect(s), rel=1e-12)

    def test_equal_effects_unbiased(self):
        for tau in (0.1, 0.4, 0.9):
            s = LinearBiasSetting(tau=tau, rho=0.2, beta_w=1.1, beta_g=1.1)
            assert weighted_slope_star(s) == pytest.approx(true_effect(s), rel=1e-12)

    def test_against_mc_oracle(self):
        s = LinearBiasSetting(tau=0.7, rho=0.3, beta_w=1.0, beta_g=0.0)
        mc = mc_star_slope(s, n=100_000, reps=12, seed=1)
        assert abs(mc.value - weighted_slope_star(s)) < 3.0 * mc.se

    def test_degenerate_denominator(self):
        with pytest.raises(DegenerateDenominator):
            weighted_slope_star(LinearBiasSetting(tau=0.5, rho=-1.0, beta_w=1.0, beta_g=0.0))


class TestUnbiasednessFactor:
    @pytest.mark.parametrize("tau", [0.0, 0.5, 1.0])
    def test_zero_at_special_tau(self, tau):
        s = LinearBiasSetting(tau=tau, rho=0.3, beta_w=2.0, beta_g=-1.0)
        assert unbiasedness_factor(s) == 0.0

    def test_zero_at_perfect_correlation(self):
        s = LinearBiasSetting(tau=0.7, rho=1.0, beta_w=2.0, beta_g=-1.0)
        assert unbiasedness_factor(s) == 0.0

    @given(
        st.floats(0.01, 0.99),
        st.floats(-0.99, 0.99),
        st.floats(-3.0, 3.0),
        st.floats(-3.0, 3.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_factor_equals_gap_times_denominator(self, tau, rho, bw, bg):
        s = LinearBiasSetting(tau=tau, rho=rho, beta_w=bw, beta_g=bg)
        den = tau**2 + 2 * tau * (1 - tau) * rho + (1 - tau) ** 2
        gap = weighted_slope_star(s) - true_effect(s)
        assert gap * den == pytest.approx(unbiasedness_factor(s), rel=1e-8, abs=1e-10)


class TestScalarMisspecBias:
    def test_no_misspecification(self):
        moments = TauMoments.from_dist(UNIFORM01)
        assert scalar_misspec_bias(1.0, 0.3, moments, beta_g_star=2.0) == 0.0

    def test_perfect_correlation(self):
        moments = TauMoments.from_dist(UNIFORM01)
        assert scalar_misspec_bias(0.5, 1.0, moments, beta_g_star=2.0) == 0.0

    def test_constant_tau_unbiased_on_grid(self):
        for v in np.linspace(0.05, 0.95, 19):
            moments = TauMoments.from_dist(Dist("point", (float(v),)))
            assert scalar_misspec_bias(0.5, 0.3, moments, beta_g_star=1.0) == 0.0

    def test_true_zero_crossing(self):
        # the genuine root in rho is E(tau^2)/E[tau(1-tau)]; pick a tau law
        # that places it inside (0, 1) and confirm with the oracle
        dist = Dist("beta", (2.0, 8.0))
        moments = TauMoments.from_dist(dist)
        rho_zero = moments.mean_sq / (moments.mean - moments.mean_sq)
        assert 0.0 < rho_zero < 1.0
        assert scalar_misspec_bias(0.5, rho_zero, moments, beta_g_star=1.0) == pytest.approx(
            0.0, abs=1e-14
        )
        mc = mc_ols_omega(
            McOlsConfig(rho=rho_zero, beta_w=1.0, beta_g=1.0, tau_dist=dist,
                        misspec="scalar", c=0.5),
            n=100_000,
            reps=20,
            seed=3,
        )
        assert abs(mc.value) < 3.0 * mc.se

    @pytest.mark.parametrize(
        "c,rho,beta_g",
        [(0.5, 0.4, 1.0), (0.5, 0.0, 1.0), (0.75, 0.7, -2.0), (1.4, 0.25, 0.8)],
    )
    def test_matches_mc_oracle(self, c, rho, beta_g):
        moments = TauMoments.from_dist(UNIFORM01)
        closed = scalar_misspec_bias(c, rho, moments, beta_g_star=beta_g)
        mc = mc_ols_omega(
            McOlsConfig(rho=rho, beta_w=1.0, beta_g=beta_g, tau_dist=UNIFORM01,
                        misspec="scalar", c=c),
            n=100_000,
            reps=20,
            seed=4,
        )
        assert abs(mc.value - closed) < 3.0 * mc.se

    def test_consistent_with_general_limit(self):
        moments = TauMoments.from_dist(Dist("beta", (3.0, 2.0)))
        c, rho = 0.6, 0.35
        closed = scalar_misspec_bias(c, rho, moments, beta_g_star=1.7)
        general = general_omega_bias(
            rho,
            m_t=moments.mean,
            m_t2=moments.mean_sq,
            m_s=c * moments.mean,
            m_ts=c * moments.mean_sq,
            beta_w_star=0.9,  # the home coefficient drops out of this bias
            beta_g_star=1.7,
        )
        assert general == pytest.approx(closed, rel=1e-10)

    def test_degenerate_denominator(self):
        moments = TauMoments(mean=0.0, mean_sq=0.0)
        with pytest.raises(DegenerateDenominator):
            scalar_misspec_bias(0.5, 0.3, moments, beta_g_star=1.0)


class TestMeasurementError:
    def test_no_error_gives_unit_factors(self):
        moments = TauMoments.from_dist(
            Dist("uniform", (0.25, 0.75)), Dist("point", (0.0,))
        )
        xi = measurement_error_xi(moments)
        assert xi.xi_w == 1.0 and xi.xi_g == 1.0
        assert measurement_error_bias(moments, 1.0, 1.0) == 0.0

    def test_reference_value(self):
        moments = TauMoments.from_dist(
            parse_dist("uniform:0.25:0.75"), parse_dist("uniform:-0.25:0.25")
        )
        xi = measurement_error_xi(moments)
        assert xi.xi_w == pytest.approx(0.93, abs=0.005)
        assert xi.xi_g == pytest.approx(0.93, abs=0.005)
        assert xi.xi_w == pytest.approx(xi.xi_g, abs=1e-12)

    def test_huge_noise_kills_factors(self):
        moments = TauMoments(mean=0.5, mean_sq=1.0 / 3.0, star_mean=0.5,
                             star_mean_sq=1.0 / 3.0, eta_sq=1e6)
        xi = measurement_error_xi(moments)
        assert xi.xi_w < 1e-3 and xi.xi_g < 1e-3

    def test_decreasing_and_convex(self):
        base = Dist("uniform", (0.25, 0.75))
        grid = np.linspace(0.0, 10.0, 50)
        values = []
        for eta_sq in grid:
            moments = TauMoments(mean=base.mean, mean_sq=base.raw_moment2,
                                 star_mean=base.mean, star_mean_sq=base.raw_moment2,
                                 eta_sq=float(eta_sq))
            xi = measurement_error_xi(moments)
            values.append((xi.xi_w, xi.xi_g))
        values = np.array(values)
        assert np.all((values > 0) & (values <= 1))
        assert np.all(np.diff(values, axis=0) < 0)
        assert np.all(np.diff(values, axis=0, n=2) >= -1e-9)

    def test_conservative_when_signs_match(self):
        moments = TauMoments.from_dist(
            Dist("uniform", (0.25, 0.75)), Dist("uniform", (-0.2, 0.2))
        )
        bias = measurement_error_bias(moments, beta_w_star=1.0, beta_g_star=0.7)
        assert bias < 0  # attenuation: estimate shrinks toward zero

    def test_matches_mc_oracle(self):
        tau_dist = Dist("uniform", (0.3, 0.7))
        eta_dist = Dist("uniform", (-0.15, 0.15))
        moments = TauMoments.from_dist(tau_dist, eta_dist)
        closed = measurement_error_bias(moments, beta_w_star=1.0, beta_g_star=1.0)
        mc = mc_ols_omega(
            McOlsConfig(rho=0.0, beta_w=1.0, beta_g=1.0, tau_dist=tau_dist,
                        misspec="noisy-assumed", eta_dist=eta_dist),
            n=100_000,
            reps=20,
            seed=5,
        )
        assert abs(mc.value - closed) < 3.0 * mc.se

    def test_missing_moments_rejected(self):
        with pytest.raises(ValueError):
            measurement_error_xi(TauMoments(mean=0.5, mean_sq=0.3))


class TestAdditiveError:
    @given(
        st.floats(0.05, 0.95),
        st.floats(0.0, 0.2),
        st.floats(-0.95, 0.95),
        st.floats(-3.0, 3.0),
        st.floats(-3.0, 3.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_exactly_zero(self, mean, spread, rho, bw, bg):
        mean_sq = mean**2 + spread * mean * (1 - mean)  # valid second moment
        moments = TauMoments(mean=mean, mean_sq=mean_sq)
        assert additive_error_check(moments, rho=rho, beta_w_star=bw, beta_g_star=bg) == 0.0

    def test_degenerate_noise(self):
        moments = TauMoments.from_dist(Dist("uniform", (0.2, 0.8)))
        assert additive_error_check(moments, rho=0.4) == 0.0

    def test_mc_confirms_unbiasedness(self):
        mc = mc_ols_omega(
            McOlsConfig(rho=0.3, beta_w=1.0, beta_g=0.8,
                        tau_dist=Dist("uniform", (0.25, 0.75)),
                        misspec="noisy-true", eta_dist=Dist("uniform", (-0.1, 0.1))),
            n=100_000,
            reps=20,
            seed=6,
        )
        assert abs(mc.value) < 3.0 * mc.se


class TestMcOls:
    def test_no_misspecification_unbiased(self):
        mc = mc_ols_omega(
            McOlsConfig(rho=0.5, beta_w=1.0, beta_g=0.5, tau_dist=UNIFORM01),
            n=50_000,
            reps=16,
            seed=7,
        )
        assert abs(mc.value) < 3.0 * mc.se

    def test_config_validation(self):
        with pytest.raises(ValueError):
            McOlsConfig(rho=0.1, beta_w=1.0, beta_g=1.0, tau_dist=UNIFORM01,
                        misspec="noisy-assumed")


class TestCurveGap:
    def test_independent_neighborhood_means_no_gap(self):
        # independence makes the conditional window arbitrary, so a wide one
        # just averages away the Monte-Carlo noise
        dgp = CurveDgp(rho=0.0, effect_w=lambda w: w + 0.3 * w**2,
                       effect_g=lambda g: 0.6 * g)
        res = naive_curve_gap(dgp, np.linspace(-1.5, 1.5, 9), mc_draws=200_000,
                              k=40_000, seed=0)
        assert np.max(np.abs(res.gap)) < 0.02

    def test_no_neighborhood_effect_means_no_gap(self):
        dgp = CurveDgp(rho=0.7, effect_w=lambda w: w**3,
                       effect_g=lambda g: np.zeros_like(g))
        res = naive_curve_gap(dgp, np.linspace(-1.0, 1.0, 5), mc_draws=20_000, seed=1)
        np.testing.assert_allclose(res.gap, 0.0, atol=1e-12)

    def test_positive_correlation_steepens_naive_curve(self):
        dgp = CurveDgp(rho=0.6, effect_w=lambda w: w, effect_g=lambda g: 0.8 * g)
        grid = np.linspace(-1.5, 1.5, 7)
        res = naive_curve_gap(dgp, grid, mc_draws=100_000, seed=2)
        slope_true = np.polyfit(grid, res.curve, 1)[0]
        slope_naive = np.polyfit(grid, res.curve_naive, 1)[0]
        assert slope_naive > slope_true + 0.2

    def test_negative_correlation_flattens_naive_curve(self):
        dgp = CurveDgp(rho=-0.6, effect_w=lambda w: w, effect_g=lambda g: 0.8 * g)
        grid = np.linspace(-1.5, 1.5, 7)
        res = naive_curve_gap(dgp, grid, mc_draws=100_000, seed=3)
        slope_true = np.polyfit(grid, res.curve, 1)[0]
        slope_naive = np.polyfit(grid, res.curve_naive, 1)[0]
        assert slope_naive < slope_true - 0.2

    def test_covariate_branch(self):
        dgp = CurveDgp(rho=0.5, effect_w=lambda w: w, effect_g=lambda g: 0.5 * g,
                       x_coef=0.7, g_on_x=0.3, include_x=True)
        grid = np.array([-1.0, 0.0, 1.0])
        res = naive_curve_gap(dgp, grid, mc_draws=30_000, seed=4, n_x_eval=150)
        slope_true = np.polyfit(grid, res.curve, 1)[0]
        slope_naive = np.polyfit(grid, res.curve_naive, 1)[0]
        assert slope_naive > slope_true

    def test_insufficient_draws_warning(self):
        dgp = CurveDgp(rho=0.0)
        with pytest.warns(InsufficientDraws):
            naive_curve_gap(dgp, np.array([0.0]), mc_draws=200, seed=0)


class TestLambdaNaiveGap:
    def test_zero_when_mean_free_of_neighborhood(self):
        dgp = CurveDgp(rho=0.7, effect_w=lambda w: w + 0.2 * w**2,
                       effect_g=lambda g: np.zeros_like(g))
        gap = lambda_naive_gap(dgp, w=0.3, g=0.1, delta_w=0.5, delta_g=0.4,
                               mc_draws=20_000, seed=0)
        assert gap == pytest.approx(0.0, abs=1e-12)

    def test_zero_when_independent_and_no_neighborhood_shift(self):
        dgp = CurveDgp(rho=0.0, effect_w=lambda w: w, effect_g=lambda g: 0.7 * g)
        gap = lambda_naive_gap(dgp, w=0.2, g=0.0, delta_w=0.6, delta_g=0.0,
                               mc_draws=400_000, k=50_000, seed=1)
        assert gap == pytest.approx(0.0, abs=0.01)

    def test_linear_dgp_matches_closed_form(self):
        # for tau-weighted linear effects the gap is the naive-slope shift
        # estimate minus the true shift effect
        tau0, rho, bw, bg = 0.7, 0.5, 1.0, 0.8
        dgp = CurveDgp(rho=rho, effect_w=lambda w: tau0 * bw * w,
                       effect_g=lambda g: (1 - tau0) * bg * g)
        dw, dg_shift = 0.5, 0.5
        gap = lambda_naive_gap(dgp, w=0.0, g=0.0, delta_w=dw, delta_g=dg_shift,
                               mc_draws=400_000, seed=2)
        s = LinearBiasSetting(tau=tau0, rho=rho, beta_w=bw, beta_g=bg)
        expected = naive_slope(s) * dw - (tau0 * bw * dw + (1 - tau0) * bg * dg_shift)
        assert gap == pytest.approx(expected, abs=0.02)


class TestTables:
    def test_curve_gap_table_shape(self):
        frame = curve_gap_table(rhos=(0.0, 0.5), grid=np.linspace(-1, 1, 5),
                                mc_draws=5_000, seed=0)
        assert set(frame.columns) == {"rho", "w", "curve", "curve_naive", "gap"}
        assert len(frame) == 10

    def test_scalar_misspec_table(self):
        frame = scalar_misspec_table(c=0.5, rho_grid=np.linspace(0, 0.9, 10))
        assert len(frame) == 40
        assert set(frame["tau_dist"]) == {
            "beta(0.006,0.006)", "beta(1,1)", "beta(148,1)", "beta(1,148)"
        }

    def test_xi_table_monotone(self):
        frame = xi_table(eta_sq_grid=np.linspace(0, 0.05, 6))
        for _, sub in frame.groupby("tau_star_dist"):
            assert np.all(np.diff(sub["xi_w"].to_numpy()) < 0)


class TestDistParsing:
    def test_specs(self):
        d = parse_dist("uniform:0.25:0.75")
        assert d.mean == pytest.approx(0.5)
        assert d.raw_moment2 == pytest.approx(0.25 + 0.25**2 / 3.0)
        b = parse_dist("beta:30:10")
        assert b.mean == pytest.approx(0.75)
        p = parse_dist("point:0.7")
        assert p.variance == 0.0

    def test_bad_specs(self):
        for text in ("uniform:1:0", "beta:-1:2", "point:1:2", "cauchy:0:1", "uniform:a:b"):
            with pytest.raises(ParseError):
                parse_dist(text)

    def test_sampling_matches_moments(self):
        rng = np.random.default_rng(0)
        d = parse_dist("beta:30:10")
        x = d.sample(rng, 200_000)
        assert x.mean() == pytest.approx(d.mean, abs=0.002)
        assert (x**2).mean() == pytest.approx(d.raw_moment2, abs=0.002)
