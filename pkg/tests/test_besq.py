import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import kstest, ncx2

from bnpricer import besq
from helpers import density_cdf

# spec tolerances for the oracle-integral grid
NORM_ATOL = 1e-8
MEAN_RTOL = 1e-6
INV_RTOL = 1e-6

X_GRID = [0.01, 1.0, 100.0, 1e4]
DELTA_GRID = [0.01, 1.0, 100.0]


class TestTransitionValidation:
    def test_nonpositive_start(self):
        with pytest.raises(besq.DomainError):
            besq.BesqTransition(x_from=0.0, u_from=0.0, u_to=1.0)

    def test_clock_must_advance(self):
        with pytest.raises(besq.DomainError):
            besq.BesqTransition(x_from=1.0, u_from=2.0, u_to=2.0)
        with pytest.raises(besq.DomainError):
            besq.BesqTransition(x_from=1.0, u_from=2.0, u_to=1.0)

    def test_negative_x_to(self):
        tr = besq.BesqTransition(1.0, 0.0, 1.0)
        with pytest.raises(besq.DomainError):
            besq.transition_density(tr, -1.0)


class TestDensity:
    @pytest.mark.parametrize("x_from", X_GRID)
    @pytest.mark.parametrize("delta", DELTA_GRID)
    def test_normalizes(self, x_from, delta):
        tr = besq.BesqTransition(x_from, 0.0, delta)
        total = besq.integrate_density(tr, power=0.0)
        assert total == pytest.approx(1.0, abs=NORM_ATOL), (
            f"x={x_from} delta={delta}: integral {total}"
        )

    @pytest.mark.parametrize("x_from", X_GRID)
    @pytest.mark.parametrize("delta", DELTA_GRID)
    def test_mean_identity(self, x_from, delta):
        tr = besq.BesqTransition(x_from, 0.0, delta)
        mean = besq.integrate_density(tr, power=1.0)
        assert mean == pytest.approx(x_from + 4 * delta, rel=MEAN_RTOL)

    @pytest.mark.parametrize("x_from", X_GRID)
    @pytest.mark.parametrize("delta", DELTA_GRID)
    def test_inverse_moment_vs_quadrature(self, x_from, delta):
        tr = besq.BesqTransition(x_from, 0.0, delta)
        by_quad = besq.integrate_density(tr, power=-1.0)
        assert besq.inverse_moment(tr) == pytest.approx(by_quad, rel=INV_RTOL)

    @pytest.mark.parametrize(
        "x_from,delta", [(0.01, 0.01), (1.0, 1.0), (100.0, 25.0), (0.5, 3.0)]
    )
    def test_matches_scipy_ncx2(self, x_from, delta):
        # independent implementation of the same law
        tr = besq.BesqTransition(x_from, 0.0, delta)
        xs = np.linspace(1e-6, tr.mean + 10 * tr.std, 200)
        ref = ncx2.pdf(xs / delta, 4, x_from / delta) / delta
        ours = besq.transition_density(tr, xs)
        keep = ref > 1e-250
        np.testing.assert_allclose(ours[keep], ref[keep], rtol=1e-12)

    def test_zero_boundary(self):
        tr = besq.BesqTransition(1.0, 0.0, 1.0)
        assert besq.transition_density(tr, 0.0) == 0.0

    def test_no_overflow_extreme(self):
        # small clock step and large level: scaled Bessel must not overflow
        tr = besq.BesqTransition(1e6, 0.0, 1e-3)
        val = besq.transition_density(tr, 1e6)
        assert np.isfinite(val) and val > 0.0

    def test_chapman_kolmogorov(self):
        x0, d1, d2 = 1.0, 0.5, 0.7
        one = besq.BesqTransition(x0, 0.0, d1)
        direct = besq.BesqTransition(x0, 0.0, d1 + d2)
        for y in [0.5, 1.0, 2.5, 6.0]:
            composed, _ = quad(
                lambda z: besq.transition_density(one, z)
                * besq.transition_density(besq.BesqTransition(z, d1, d1 + d2), y),
                0.0,
                besq.truncation_bound(one),
                limit=200,
                epsabs=1e-12,
                epsrel=1e-12,
            )
            assert composed == pytest.approx(
                float(besq.transition_density(direct, y)), abs=1e-6
            )


class TestInverseMoment:
    def test_frozen_value(self):
        # (1 - e^{-2}) / 100, cross-checked against quadrature above
        tr = besq.BesqTransition(100.0, 0.0, 25.0)
        assert besq.inverse_moment(tr) == pytest.approx(0.008646647167633872, rel=1e-12)

    def test_short_step_limit(self):
        tr = besq.BesqTransition(100.0, 0.0, 1e-12)
        assert besq.inverse_moment(tr) == pytest.approx(0.01, rel=1e-9)

    def test_large_level_limit(self):
        tr = besq.BesqTransition(1e15, 0.0, 1.0)
        assert besq.inverse_moment(tr) < 1e-14

    @given(
        x_from=st.floats(1e-3, 1e6),
        delta=st.floats(1e-6, 1e4),
    )
    @settings(max_examples=200)
    def test_strictly_below_inverse_start(self, x_from, delta):
        # the gap is exp(-x/2d)/x; restrict to where float64 can resolve
        # it (strictness holds mathematically for every delta > 0)
        assume(x_from / (2.0 * delta) < 35.0)
        tr = besq.BesqTransition(x_from, 0.0, delta)
        assert besq.inverse_moment(tr) < 1.0 / x_from


class TestSampler:
    def test_mean_and_inverse_mean(self):
        tr = besq.BesqTransition(1.0, 0.0, 0.25)
        rng = np.random.default_rng(42)
        draws = besq.sample_transition(tr, rng, size=10**6)
        stderr = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - 2.0) < 3 * stderr

        inv = 1.0 / draws
        inv_stderr = inv.std(ddof=1) / np.sqrt(inv.size)
        expected = -np.expm1(-2.0)  # (1 - e^{-2}) / 1
        assert abs(inv.mean() - expected) < 3 * inv_stderr

    def test_positive(self):
        tr = besq.BesqTransition(0.01, 0.0, 100.0)
        rng = np.random.default_rng(0)
        assert np.all(besq.sample_transition(tr, rng, size=10**4) > 0.0)

    def test_degenerate_step_concentrates(self):
        tr = besq.BesqTransition(5.0, 0.0, 1e-9)
        rng = np.random.default_rng(1)
        draws = besq.sample_transition(tr, rng, size=10**4)
        assert draws.std() < 1e-3
        assert draws.mean() == pytest.approx(5.0, abs=1e-3)

    def test_scalar_draw(self):
        tr = besq.BesqTransition(1.0, 0.0, 1.0)
        value = besq.sample_transition(tr, np.random.default_rng(2))
        assert isinstance(value, float) and value > 0.0

    def test_ks_against_integrated_density(self):
        tr = besq.BesqTransition(1.0, 0.0, 0.25)
        rng = np.random.default_rng(7)
        draws = besq.sample_transition(tr, rng, size=10**5)
        stat, pvalue = kstest(draws, density_cdf(tr))
        assert pvalue > 0.01, f"KS stat {stat:.5f}, p {pvalue:.4f}"
