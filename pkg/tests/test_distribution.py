import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from dfrelay.distribution import (
    MinSnrDistribution,
    RicianHop,
    SeriesControl,
    min_cdf,
    min_expected_inverse_tail,
    min_pdf,
    reference_min_pdf,
    reference_single_hop_pdf,
    reference_single_hop_survival,
    single_hop_pdf,
    single_hop_survival,
    truncation_order,
)
from dfrelay.errors import DomainError, SeriesTruncationError
from dfrelay.montecarlo import estimate_density, estimate_min_cdf, estimate_single_hop_survival, sample_hop_snr
from reference import expanded_min_cdf, expanded_min_pdf

MC_SEED = 1
N_MC = 10**7


class TestTypes:
    def test_derived_constants(self):
        hop = RicianHop(3.0, 5.0)
        assert hop.rate == pytest.approx(0.8)
        assert hop.amplitude == pytest.approx(0.8 * math.exp(-3.0))

    def test_from_db(self):
        assert RicianHop.from_db(2.0, 10.0).mean_snr == pytest.approx(10.0)

    @pytest.mark.parametrize("k, snr", [(-0.1, 1.0), (1.0, 0.0), (1.0, -3.0), (math.nan, 1.0)])
    def test_invalid_hop(self, k, snr):
        with pytest.raises(DomainError):
            RicianHop(k, snr)

    @pytest.mark.parametrize("kwargs", [{"tolerance": 0.0}, {"max_terms": 0}, {"max_terms": 2.5}])
    def test_invalid_control(self, kwargs):
        with pytest.raises(DomainError):
            SeriesControl(**kwargs)

    def test_frozen(self, fig1_dist):
        with pytest.raises(AttributeError):
            fig1_dist.hop_x = RicianHop(0, 1)

    def test_truncation_order_bound(self):
        hop = RicianHop(5.0, 5.0)
        order, tail, converged = truncation_order(hop, SeriesControl())
        assert converged and tail < 1e-12
        assert special.gammainc(order, 5.0) >= 1e-12  # one fewer term would not do
        assert truncation_order(RicianHop(0.0, 1.0), SeriesControl()) == (0, 0.0, True)

    def test_truncation_capped(self):
        order, tail, converged = truncation_order(RicianHop(5.0, 5.0), SeriesControl(max_terms=10))
        assert order == 9 and not converged and tail > 1e-3


class TestSingleHop:
    def test_rayleigh_pdf(self):
        hop = RicianHop(0.0, 5.0)
        assert single_hop_pdf(hop, 0.0) == pytest.approx(0.2, rel=1e-15)
        g = np.linspace(0, 30, 7)
        np.testing.assert_allclose(single_hop_pdf(hop, g), np.exp(-g / 5) / 5, rtol=1e-14)

    def test_pdf_at_zero_is_amplitude(self):
        hop = RicianHop(3.0, 5.0)
        assert single_hop_pdf(hop, 0.0) == pytest.approx(hop.amplitude, rel=1e-14)

    @pytest.mark.parametrize("k", [0.0, 1.0, 3.0, 7.0])
    def test_pdf_normalized(self, k):
        hop = RicianHop(k, 5.0)
        total, _ = integrate.quad(lambda g: single_hop_pdf(hop, g), 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert abs(total - 1.0) <= 1e-9

    @pytest.mark.parametrize("k, snr", [(3.0, 5.0), (10.0, 2.0), (0.5, 40.0)])
    def test_pdf_matches_bessel_form(self, k, snr):
        hop = RicianHop(k, snr)
        g = np.linspace(0, 3 * snr, 40)
        np.testing.assert_allclose(single_hop_pdf(hop, g), reference_single_hop_pdf(hop, g), rtol=1e-9, atol=1e-13)

    def test_survival_trivial(self):
        assert single_hop_survival(RicianHop(4.0, 2.0), 0.0) == 1.0
        g = np.linspace(0, 20, 9)
        np.testing.assert_allclose(single_hop_survival(RicianHop(0.0, 5.0), g), np.exp(-g / 5), rtol=1e-14)

    @pytest.mark.parametrize("k", [1.0, 5.0, 10.0])
    def test_survival_matches_marcum_form(self, k):
        hop = RicianHop(k, 5.0)
        g = np.linspace(0, 15, 31)
        np.testing.assert_allclose(single_hop_survival(hop, g), reference_single_hop_survival(hop, g), atol=2e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            single_hop_pdf(RicianHop(1, 1), -0.1)
        with pytest.raises(DomainError):
            single_hop_survival(RicianHop(1, 1), -0.1)

    @pytest.mark.slow
    def test_pdf_against_histogram(self):
        hop = RicianHop(3.0, 5.0)
        samples = sample_hop_snr(hop, MC_SEED, N_MC)
        est = estimate_density(samples, 5.0, 0.05)
        # bin average of the density, by quadrature
        avg, _ = integrate.quad(lambda g: single_hop_pdf(hop, g), 4.975, 5.025)
        assert abs(est.z_score(avg / 0.05)) <= 3.0

    @pytest.mark.slow
    def test_survival_against_simulation(self):
        hop = RicianHop(5.0, 5.0)
        est = estimate_single_hop_survival(hop, 3.0, MC_SEED, N_MC)
        assert abs(est.z_score(single_hop_survival(hop, 3.0))) <= 3.0


class TestMinCdf:
    def test_zero(self, fig1_dist):
        assert min_cdf(fig1_dist, 0.0) == 0.0
        assert fig1_dist.survival(0.0) == 1.0

    def test_exponential_min(self):
        dist = MinSnrDistribution.from_params(0, 5, 0, 5)
        assert min_cdf(dist, 5.0) == pytest.approx(1 - math.exp(-2.0), rel=1e-14)

    def test_factorized_identity(self, fig1_dist):
        g = np.linspace(0, 25, 51)
        sx = single_hop_survival(fig1_dist.hop_x, g)
        sy = single_hop_survival(fig1_dist.hop_y, g)
        np.testing.assert_allclose(1.0 - min_cdf(fig1_dist, g), sx * sy, rtol=1e-14, atol=1e-16)

    def test_double_series_form(self):
        dist = MinSnrDistribution.from_params(2, 5, 7, 2.5)
        g = np.linspace(0.05, 10, 30)
        np.testing.assert_allclose(expanded_min_cdf(dist, g), min_cdf(dist, g), rtol=1e-12, atol=1e-14)

    def test_monotone_and_limit(self, fig1_dist):
        g = np.linspace(0, 60, 601)
        cdf = min_cdf(fig1_dist, g)
        assert np.all(np.diff(cdf) >= -1e-15)
        assert min_cdf(fig1_dist, 100 * 5.0) >= 1 - 1e-8

    @pytest.mark.parametrize("kx, ky", [(1, 3), (3, 5), (5, 5)])
    def test_truncation_40_vs_512(self, kx, ky):
        g = np.linspace(0.01, 20, 200)
        full = MinSnrDistribution.from_params(kx, 5, ky, 5, max_terms=512)
        short = MinSnrDistribution.from_params(kx, 5, ky, 5, max_terms=40)
        assert np.max(np.abs(short.cdf(g) / full.cdf(g) - 1)) < 1e-6

    def test_ten_terms_visibly_off(self):
        g = np.linspace(0.01, 20, 200)
        full = MinSnrDistribution.from_params(5, 5, 5, 5)
        short = MinSnrDistribution.from_params(5, 5, 5, 5, max_terms=10)
        assert np.max(np.abs(short.cdf(g) - full.cdf(g))) > 1e-3

    @pytest.mark.slow
    def test_k_factor_ordering_against_simulation(self):
        low = MinSnrDistribution.from_params(0, 5, 3, 5)
        high = MinSnrDistribution.from_params(5, 5, 3, 5)
        grid = [1.0, 10.0]
        mc_low = estimate_min_cdf(low, grid, MC_SEED, 2_000_000)
        mc_high = estimate_min_cdf(high, grid, MC_SEED, 2_000_000)
        # larger K_x: lower CDF below the mean, higher in the upper tail
        assert high.cdf(1.0) < low.cdf(1.0) and mc_high[0].value < mc_low[0].value
        assert high.cdf(10.0) > low.cdf(10.0) and mc_high[1].value > mc_low[1].value
        for dist, est in ((low, mc_low), (high, mc_high)):
            for g, e in zip(grid, est):
                assert abs(e.z_score(dist.cdf(g))) <= 3.0


class TestMinPdf:
    def test_exponential_min(self):
        dist = MinSnrDistribution.from_params(0, 5, 0, 2)
        g = np.linspace(0, 10, 11)
        s = 0.2 + 0.5
        np.testing.assert_allclose(min_pdf(dist, g), s * np.exp(-s * g), rtol=1e-14)

    @pytest.mark.parametrize("params", [(3, 5, 5, 5), (0, 5, 7, 2.5), (10, 1, 2, 30)])
    def test_normalized(self, params):
        dist = MinSnrDistribution.from_params(*params)
        total, _ = integrate.quad(lambda g: min_pdf(dist, g), 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert abs(total - 1.0) <= 1e-9

    def test_derivative_of_cdf(self, fig1_dist):
        grid = np.linspace(0.1, 20, 50)
        h = 1e-4 * grid
        fd = (min_cdf(fig1_dist, grid + h) - min_cdf(fig1_dist, grid - h)) / (2 * h)
        np.testing.assert_allclose(fd, min_pdf(fig1_dist, grid), rtol=1e-6)

    def test_expanded_triple_sum(self):
        dist = MinSnrDistribution.from_params(1, 5, 3, 8)
        g = np.linspace(0, 20, 25)
        np.testing.assert_allclose(expanded_min_pdf(dist, g), min_pdf(dist, g), rtol=1e-10)

    def test_mixture_matches_factorized(self, fig1_dist):
        mix = fig1_dist.mixture()
        assert abs(mix.weights.sum() - 1.0) <= fig1_dist.truncation_bound + 1e-14
        g = np.linspace(0, 20, 30)
        p = np.arange(mix.max_order + 1)[:, None]
        dens = np.exp(np.log(mix.rate) * (p + 1) + special.xlogy(p, g) - mix.rate * g - special.gammaln(p + 1))
        np.testing.assert_allclose(mix.weights @ dens, min_pdf(fig1_dist, g), rtol=1e-12)

    @given(st.floats(0, 10), st.floats(0, 10), st.floats(0.1, 100), st.floats(0.1, 100), st.floats(0, 500))
    @settings(max_examples=60, deadline=None)
    def test_nonnegative(self, kx, ky, sx, sy, g):
        dist = MinSnrDistribution.from_params(kx, sx, ky, sy)
        assert min_pdf(dist, g) >= 0.0


class TestExpectedInverseTail:
    def test_exponential_reduction(self):
        dist = MinSnrDistribution.from_params(0, 5, 0, 5)
        s = 0.4
        assert min_expected_inverse_tail(dist, 0.5) == pytest.approx(s * special.exp1(s * 0.5), rel=1e-14)

    def test_decreasing(self, fig1_dist):
        values = [min_expected_inverse_tail(fig1_dist, g) for g in np.geomspace(1e-3, 20, 40)]
        assert np.all(np.diff(values) < 0)

    def test_against_quadrature(self):
        dist = MinSnrDistribution.from_params(2, 5, 4, 2.5)
        oracle, _ = integrate.quad(lambda g: reference_min_pdf(dist, g) / g, 0.3, np.inf,
                                   epsabs=0, epsrel=1e-12, limit=200)
        assert abs(min_expected_inverse_tail(dist, 0.3) / oracle - 1) <= 1e-7

    def test_truncation_failure(self):
        dist = MinSnrDistribution.from_params(5, 5, 5, 5, max_terms=5)
        with pytest.raises(SeriesTruncationError):
            min_expected_inverse_tail(dist, 0.5)

    def test_domain(self, fig1_dist):
        with pytest.raises(DomainError):
            min_expected_inverse_tail(fig1_dist, 0.0)


def test_replace_keeps_invariants(fig1_dist):
    short = replace(fig1_dist, control=SeriesControl(max_terms=10))
    assert short.order_x == 9 and not short.converged
