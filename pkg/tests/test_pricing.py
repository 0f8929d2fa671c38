import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnpricer import besq, pricing, simulate
from bnpricer.core_types import MmmParams, TimeGrid
from bnpricer.pricing import (
    BondQuote,
    ExhaustKey,
    PricingDomainError,
    StoppingTimeReached,
    Variant,
    bn_vs_risk_neutral,
    bond_price,
    enhanced_bond_price,
    enhanced_fraction,
    fraction_in_gop,
    hedge_ratio_savings,
    make_quote,
)

# reference case: s_star = 100, clock window 25, exponent x = 2
KEY_X2 = ExhaustKey(phi_t=1.0, phi_T=26.0)


class TestExhaustKey:
    def test_window_must_open(self):
        with pytest.raises(PricingDomainError):
            ExhaustKey(phi_t=2.0, phi_T=2.0)
        with pytest.raises(PricingDomainError):
            ExhaustKey(phi_t=2.0, phi_T=1.0)

    def test_positive_clock(self):
        with pytest.raises(PricingDomainError):
            ExhaustKey(phi_t=0.0, phi_T=1.0)

    def test_from_trendline(self):
        p = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)
        key = ExhaustKey.from_trendline(p, 0.0, 30.0)
        expected = np.exp(2.15 + 0.053 * 30.0) - np.exp(2.15)
        assert key.delta_phi == pytest.approx(expected, rel=1e-14)

    def test_from_trendline_needs_time(self):
        p = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)
        with pytest.raises(PricingDomainError):
            ExhaustKey.from_trendline(p, 30.0, 30.0)

    def test_from_observed_stop(self):
        with pytest.raises(StoppingTimeReached):
            ExhaustKey.from_observed(3.74, 3.74)


class TestClosedForms:
    def test_bond_price_frozen(self):
        assert bond_price(100.0, KEY_X2) == pytest.approx(0.864664716763387, abs=1e-12)

    def test_bond_price_vs_inverse_moment(self):
        # same formula through the transition-law engine; guards refactoring
        for s, phi_t, phi_T in [(100.0, 1.0, 26.0), (3.0, 2.0, 2.5), (55.0, 8.6, 42.0)]:
            tr = besq.BesqTransition(s, phi_t, phi_T)
            assert bond_price(s, ExhaustKey(phi_t, phi_T)) == pytest.approx(
                s * besq.inverse_moment(tr), rel=1e-14
            )

    def test_bond_price_mc_oracle(self):
        tr = besq.BesqTransition(100.0, 1.0, 26.0)
        rng = np.random.default_rng(3)
        inv = 1.0 / besq.sample_transition(tr, rng, size=200_000)
        stderr = inv.std(ddof=1) / np.sqrt(inv.size)
        assert abs(100.0 * inv.mean() - bond_price(100.0, KEY_X2)) < 3 * 100.0 * stderr

    def test_price_limits(self):
        assert bond_price(100.0, ExhaustKey(1.0, 1.0 + 1e-9)) == pytest.approx(1.0)
        assert bond_price(1e-12, KEY_X2) == pytest.approx(0.0, abs=1e-12)

    def test_hedge_ratio_frozen(self):
        assert hedge_ratio_savings(100.0, KEY_X2) == pytest.approx(
            0.593994150290162, abs=1e-12
        )

    def test_hedge_ratio_finite_difference(self):
        # d0 = d(P/S) / d(1/S) with the clock window fixed
        dphi = 25.0
        s = 100.0
        inv_s = 1.0 / s
        h = 1e-7 * inv_s

        def gop_price(inv_level):
            level = 1.0 / inv_level
            return bond_price(level, ExhaustKey(1.0, 1.0 + dphi)) / level

        derivative = (gop_price(inv_s + h) - gop_price(inv_s - h)) / (2.0 * h)
        assert hedge_ratio_savings(s, KEY_X2) == pytest.approx(derivative, rel=1e-6)

    def test_hedge_ratio_limits(self):
        assert hedge_ratio_savings(1e-10, KEY_X2) == pytest.approx(0.0, abs=1e-12)
        assert hedge_ratio_savings(1e4, KEY_X2) == pytest.approx(1.0, abs=1e-12)

    def test_fraction_frozen(self):
        assert fraction_in_gop(100.0, KEY_X2) == pytest.approx(
            0.313035285499331, abs=1e-12
        )

    def test_fraction_limits(self):
        assert fraction_in_gop(1e-10, KEY_X2) == pytest.approx(1.0, abs=1e-10)
        assert fraction_in_gop(1e5, KEY_X2) == pytest.approx(0.0, abs=1e-12)

    def test_fraction_equals_direct_formula(self):
        # (1/P - 1) * x against the expm1 evaluation
        for x in [1e-6, 0.1, 2.0, 10.0]:
            key = ExhaustKey(1.0, 1.0 + 1.0)
            s = 2.0 * x
            direct = (1.0 / bond_price(s, key) - 1.0) * x
            assert fraction_in_gop(s, key) == pytest.approx(direct, rel=1e-9)


class TestEnhanced:
    def test_matches_trendline_when_on_trend(self):
        p = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)
        t, maturity = 7.0, 30.0
        tau_obs = 2.15 + 0.053 * t
        tau_T = 2.15 + 0.053 * maturity
        plain = bond_price(100.0, ExhaustKey.from_trendline(p, t, maturity))
        assert enhanced_bond_price(100.0, tau_obs, tau_T) == pytest.approx(
            plain, rel=1e-12
        )

    def test_frozen_value(self):
        # window of 50 at level 100: x = 1
        tau_T = np.log(50.0 + np.exp(1.0))
        assert enhanced_bond_price(100.0, 1.0, tau_T) == pytest.approx(
            0.632120558828558, abs=1e-9
        )
        assert enhanced_fraction(100.0, 1.0, tau_T) == pytest.approx(
            0.581976706869326, abs=1e-9
        )

    def test_stop_signalled(self):
        with pytest.raises(StoppingTimeReached):
            enhanced_bond_price(100.0, 3.8, 3.74)

    def test_price_to_one_at_stop(self):
        assert enhanced_bond_price(100.0, 3.74 - 1e-9, 3.74) == pytest.approx(1.0)


class TestAlgebraicIdentities:
    @given(x=st.floats(1e-8, 50.0))
    @settings(max_examples=300)
    def test_hedge_identity(self, x):
        p = pricing.price_from_exponent(x)
        d0 = pricing.hedge_ratio_from_exponent(x)
        pi = pricing.fraction_from_exponent(x)
        assert d0 + pi * p == pytest.approx(p, rel=5e-15, abs=5e-16)

    @given(x=st.floats(1e-8, 50.0))
    @settings(max_examples=300)
    def test_fraction_identity(self, x):
        assert pricing.fraction_from_exponent(x) == pytest.approx(
            x / np.expm1(x), rel=5e-15
        )


class TestMonotonicity:
    def test_price_increasing_in_level(self):
        s = np.linspace(1.0, 500.0, 200)
        prices = pricing.price_from_exponent(s / (2.0 * 25.0))
        assert np.all(np.diff(prices) > 0.0)

    def test_price_increasing_in_phi_t(self):
        # keep x below ~25 so successive prices stay resolvable below 1
        phis = np.linspace(1.0, 24.0, 100)
        prices = np.array([bond_price(100.0, ExhaustKey(p, 26.0)) for p in phis])
        assert np.all(np.diff(prices) > 0.0)

    def test_hedge_ratio_increasing_fraction_decreasing(self):
        x = np.linspace(1e-4, 30.0, 500)
        assert np.all(np.diff(pricing.hedge_ratio_from_exponent(x)) > 0.0)
        assert np.all(np.diff(pricing.fraction_from_exponent(x)) < 0.0)


class TestQuote:
    def test_make_quote_consistent(self):
        p = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)
        quote = make_quote(p, 0.0, 30.0, 100.0)
        assert 0.0 < quote.price < 1.0
        assert quote.risk_neutral_price == 1.0
        assert bn_vs_risk_neutral(quote) == quote.price
        assert quote.variant is Variant.TRENDLINE

    def test_enhanced_quote_needs_tau_obs(self):
        p = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)
        with pytest.raises(PricingDomainError, match="tau_obs"):
            make_quote(p, 0.0, 30.0, 100.0, Variant.ENHANCED)

    def test_inconsistent_quote_rejected(self):
        with pytest.raises(PricingDomainError, match="identity"):
            BondQuote(
                t=0.0,
                maturity=30.0,
                s_star=100.0,
                price=0.8,
                hedge_ratio_savings=0.3,
                fraction_in_gop=0.3,
                variant=Variant.TRENDLINE,
            )


class TestMartingaleUnderPricingMeasure:
    def test_gop_denominated_price_is_driftless(self):
        # mean of P(t_k, T) / S_k across exact paths stays at its start
        params = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)
        maturity = 30.0
        checkpoints = np.array([0.0, 5.0, 10.0, 18.0, 25.0])
        grid = TimeGrid.from_points(checkpoints)
        paths = simulate.simulate_q_paths(params, grid, 100_000, np.random.default_rng(9))
        start = bond_price(
            params.s_star_0, ExhaustKey.from_trendline(params, 0.0, maturity)
        ) / params.s_star_0
        for j, t in enumerate(checkpoints[1:], start=1):
            key = ExhaustKey.from_trendline(params, float(t), maturity)
            values = pricing.price_from_exponent(paths[:, j] / (2.0 * key.delta_phi))
            values = values / paths[:, j]
            stderr = values.std(ddof=1) / np.sqrt(values.size)
            assert abs(values.mean() - start) < 3.0 * stderr, f"drift at t={t}"
