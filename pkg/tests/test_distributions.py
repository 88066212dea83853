import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, optimize, special, stats

from ratemix.distributions import (
    DomainError,
    GammaGammaParams,
    GammaParams,
    GigParams,
    GpParams,
    WeibullTail,
    gamma_cdf,
    gamma_gamma_cdf,
    gamma_gamma_logpdf,
    gamma_gamma_moment,
    gamma_gamma_pdf,
    gamma_gamma_quantile,
    gamma_gamma_sample,
    gamma_gig_sample,
    gamma_logpdf,
    gamma_quantile,
    gamma_sample,
    gig_logpdf,
    gig_sample,
    gp_cdf,
    gp_quantile,
    weibull_tail_combine,
)


class TestGp:
    def test_exponential_limit(self):
        assert_allclose(gp_cdf(1.0, GpParams(1.0, 0.0)), 1.0 - math.exp(-1.0), rtol=1e-12)

    def test_lower_endpoint(self):
        assert gp_cdf(0.0, GpParams(2.0, 0.3)) == 0.0

    def test_positive_xi_value(self):
        # 1 - (1 + 0.5*2/1)^(-2) = 0.75, cross-checked by integrating the density
        assert_allclose(gp_cdf(2.0, GpParams(1.0, 0.5)), 0.75, rtol=1e-12)
        dens = lambda y: (1.0 / 1.0) * (1.0 + 0.5 * y) ** (-1.0 / 0.5 - 1.0)
        val, _ = integrate.quad(dens, 0.0, 2.0)
        assert_allclose(val, 0.75, rtol=1e-9)

    def test_xi_continuity_at_zero(self):
        ygrid = np.linspace(0.01, 20.0, 50)
        gap = np.abs(gp_cdf(ygrid, GpParams(1.3, 1e-12)) - gp_cdf(ygrid, GpParams(1.3, 0.0)))
        assert gap.max() < 1e-9

    def test_quantile_examples(self):
        assert gp_quantile(0.0, GpParams(3.0, 0.2)) == 0.0
        assert_allclose(gp_quantile(1.0 - math.exp(-1.0), GpParams(1.0, 0.0)), 1.0, rtol=1e-12)
        assert_allclose(gp_quantile(0.75, GpParams(1.0, 0.5)), 2.0, rtol=1e-12)

    def test_quantile_matches_root_find(self):
        params = GpParams(2.5, 0.35)
        for p in (0.1, 0.5, 0.9, 0.99):
            root = optimize.brentq(lambda y: gp_cdf(y, params) - p, 0.0, 1e6)
            assert_allclose(gp_quantile(p, params), root, rtol=1e-9)

    @pytest.mark.parametrize("xi", [-0.4, 0.0, 0.7])
    def test_roundtrip(self, xi):
        params = GpParams(1.7, xi)
        p = np.linspace(0.0, 0.999, 200)
        assert_allclose(gp_cdf(gp_quantile(p, params), params), p, atol=1e-10)

    def test_negative_xi_bounded_support(self):
        params = GpParams(1.0, -0.5)
        assert_allclose(gp_cdf(2.0, params), 1.0, rtol=1e-12)
        with pytest.raises(DomainError):
            gp_cdf(2.5, params)
        assert gp_quantile(0.999, params) < 2.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            GpParams(0.0, 0.1)
        with pytest.raises(DomainError):
            gp_cdf(-1.0, GpParams(1.0, 0.1))
        with pytest.raises(DomainError):
            gp_quantile(1.0, GpParams(1.0, 0.1))


class TestGamma:
    def test_logpdf_exp1(self):
        assert_allclose(gamma_logpdf(1.0, GammaParams(1.0, 1.0)), -1.0, rtol=1e-12)

    def test_cdf_integer_shape(self):
        assert_allclose(gamma_cdf(2.0, GammaParams(1.0, 2.0)), 1.0 - 3.0 * math.exp(-2.0), rtol=1e-12)

    def test_cdf_at_infinity(self):
        assert_allclose(gamma_cdf(1e9, GammaParams(1.0, 2.0)), 1.0, rtol=1e-12)

    def test_matches_scipy(self):
        params = GammaParams(rate=2.5, shape=1.7)
        y = np.linspace(0.05, 8.0, 40)
        assert_allclose(gamma_logpdf(y, params), stats.gamma.logpdf(y, a=1.7, scale=1.0 / 2.5), rtol=1e-12)
        assert_allclose(gamma_cdf(y, params), stats.gamma.cdf(y, a=1.7, scale=1.0 / 2.5), rtol=1e-12)

    def test_roundtrip(self):
        params = GammaParams(rate=0.7, shape=3.2)
        p = np.linspace(0.001, 0.999, 100)
        assert_allclose(gamma_cdf(gamma_quantile(p, params), params), p, atol=1e-10)

    def test_logpdf_vs_cdf_derivative(self):
        params = GammaParams(rate=1.3, shape=2.4)
        h = 1e-6
        for y in (0.3, 1.0, 4.0):
            fd = (gamma_cdf(y + h, params) - gamma_cdf(y - h, params)) / (2.0 * h)
            assert_allclose(math.exp(gamma_logpdf(y, params)), fd, rtol=1e-5)

    def test_sample_moments(self):
        rng = np.random.default_rng(3)
        params = GammaParams(rate=2.0, shape=3.0)
        draws = gamma_sample(params, rng, size=200_000)
        assert_allclose(draws.mean(), 1.5, atol=4.0 * draws.std() / math.sqrt(draws.size))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            GammaParams(-1.0, 1.0)
        with pytest.raises(DomainError):
            gamma_logpdf(0.0, GammaParams(1.0, 1.0))


class TestGig:
    def test_gamma_boundary_logpdf(self):
        # b=0 with a=2*alpha is Gamma(alpha, beta)
        rng = np.random.default_rng(5)
        y = rng.uniform(0.05, 6.0, size=10)
        got = gig_logpdf(y, GigParams(a=2.0 * 1.4, b=0.0, beta=2.2))
        want = gamma_logpdf(y, GammaParams(rate=1.4, shape=2.2))
        assert_allclose(got, want, atol=1e-10)

    def test_inverse_gamma_boundary_logpdf(self):
        y = np.linspace(0.1, 5.0, 20)
        got = gig_logpdf(y, GigParams(a=0.0, b=3.0, beta=-1.7))
        want = stats.invgamma.logpdf(y, a=1.7, scale=1.5)
        assert_allclose(got, want, rtol=1e-12)

    @pytest.mark.parametrize("a,b,beta", [(1.0, 1.0, -0.5), (2.0, 3.0, 1.5), (0.5, 4.0, 0.0)])
    def test_normalization(self, a, b, beta):
        val, _ = integrate.quad(lambda y: math.exp(gig_logpdf(y, GigParams(a, b, beta))), 0.0, np.inf, limit=200)
        assert_allclose(val, 1.0, atol=1e-6)

    def test_sample_mean_bessel_identity(self):
        # E(Y) for GIG(a=2, b=2, beta=1) is K_2(2)/K_1(2)
        rng = np.random.default_rng(11)
        draws = gig_sample(GigParams(2.0, 2.0, 1.0), rng, size=400_000)
        want = special.kv(2.0, 2.0) / special.kv(1.0, 2.0)
        assert_allclose(draws.mean(), want, atol=4.0 * draws.std() / math.sqrt(draws.size))

    def test_sample_boundary_laws(self):
        rng = np.random.default_rng(7)
        draws = gig_sample(GigParams(a=3.0, b=0.0, beta=2.0), rng, size=100_000)
        ks = stats.kstest(draws, lambda x: gamma_cdf(x, GammaParams(rate=1.5, shape=2.0))).statistic
        assert ks < 0.01
        draws = gig_sample(GigParams(a=0.0, b=2.0, beta=-1.5), rng, size=100_000)
        ks = stats.kstest(draws, lambda x: stats.invgamma.cdf(x, a=1.5, scale=1.0)).statistic
        assert ks < 0.01

    def test_interior_sample_matches_density(self):
        rng = np.random.default_rng(13)
        params = GigParams(1.5, 2.5, -0.8)
        draws = gig_sample(params, rng, size=100_000)
        grid = np.linspace(1e-4, draws.max() * 1.2, 4000)
        dens = np.exp([gig_logpdf(g, params) for g in grid])
        cdf_grid = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
        cdf_grid /= cdf_grid[-1]
        ks = stats.kstest(draws, lambda x: np.interp(x, grid, cdf_grid)).statistic
        assert ks < 0.01

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            GigParams(0.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            GigParams(1.0, 0.0, -1.0)
        with pytest.raises(DomainError):
            GigParams(0.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            gig_logpdf(-1.0, GigParams(1.0, 1.0, 1.0))


class TestGammaGamma:
    def test_gp_reduction_cdf(self):
        # beta1=1 collapses to GP(alpha/beta2, 1/beta2); here GP(1, 0.5)
        assert_allclose(gamma_gamma_cdf(2.0, GammaGammaParams(2.0, 1.0, 2.0)), 0.75, rtol=1e-12)

    def test_gp_reduction_grid(self):
        params = GammaGammaParams(alpha=1.7, beta1=1.0, beta2=3.1)
        gp = GpParams(tau=1.7 / 3.1, xi=1.0 / 3.1)
        y = np.linspace(0.0, 60.0, 1000)
        assert np.max(np.abs(gamma_gamma_cdf(y, params) - gp_cdf(y, gp))) < 1e-12

    def test_normalization(self):
        params = GammaGammaParams(1.0, 5.0, 5.0)
        val, _ = integrate.quad(lambda y: gamma_gamma_pdf(y, params), 0.0, np.inf, limit=200)
        assert_allclose(val, 1.0, atol=1e-8)

    def test_cdf_matches_pdf_quadrature(self):
        params = GammaGammaParams(0.8, 2.5, 3.5)
        for y in (0.25, 1.0, 4.0):
            val, _ = integrate.quad(lambda t: gamma_gamma_pdf(t, params), 0.0, y, limit=200)
            assert_allclose(gamma_gamma_cdf(y, params), val, rtol=1e-9)

    def test_roundtrip(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            params = GammaGammaParams(*np.exp(rng.normal(size=3)))
            p = rng.uniform(0.01, 0.99, size=20)
            assert_allclose(gamma_gamma_cdf(gamma_gamma_quantile(p, params), params), p, atol=1e-10)

    def test_scaled_f_identity(self):
        params = GammaGammaParams(alpha=1.3, beta1=4.0, beta2=2.6)
        p = np.linspace(0.02, 0.98, 25)
        want = (1.3 * 4.0 / 2.6) * stats.f.ppf(p, 2 * 4.0, 2 * 2.6)
        assert_allclose(gamma_gamma_quantile(p, params), want, rtol=1e-10)

    def test_logpdf_vs_cdf_derivative(self):
        params = GammaGammaParams(1.1, 3.0, 2.2)
        h = 1e-6
        for y in (0.2, 1.0, 5.0):
            fd = (gamma_gamma_cdf(y + h, params) - gamma_gamma_cdf(y - h, params)) / (2.0 * h)
            assert_allclose(math.exp(gamma_gamma_logpdf(y, params)), fd, rtol=1e-5)

    def test_moment_values(self):
        assert_allclose(gamma_gamma_moment(1.0, GammaGammaParams(1.0, 5.0, 5.0)), 1.25, rtol=1e-12)
        # beta1=1: GP mean alpha/(beta2-1)
        assert_allclose(gamma_gamma_moment(1.0, GammaGammaParams(2.0, 1.0, 3.0)), 1.0, rtol=1e-12)
        # beta1=1: GP second moment 2 tau^2 / ((1-xi)(1-2xi)) with tau=1/3, xi=1/3
        assert_allclose(gamma_gamma_moment(2.0, GammaGammaParams(1.0, 1.0, 3.0)), 1.0, rtol=1e-12)

    def test_moment_monte_carlo(self):
        rng = np.random.default_rng(19)
        params = GammaGammaParams(1.0, 5.0, 5.0)
        draws = gamma_gamma_sample(params, rng, size=10_000_000)
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean() - gamma_gamma_moment(1.0, params)) < 3.0 * se

    def test_moment_domain(self):
        with pytest.raises(DomainError):
            gamma_gamma_moment(5.0, GammaGammaParams(1.0, 2.0, 5.0))

    def test_sample_ks(self):
        rng = np.random.default_rng(23)
        params = GammaGammaParams(1.4, 2.0, 3.0)
        draws = gamma_gamma_sample(params, rng, size=1_000_000)
        ks = stats.kstest(draws, lambda x: gamma_gamma_cdf(x, params)).statistic
        assert ks < 0.002

    def test_sample_gp_reduction(self):
        rng = np.random.default_rng(29)
        draws = gamma_gamma_sample(GammaGammaParams(2.0, 1.0, 4.0), rng, size=200_000)
        ks = stats.kstest(draws, lambda x: gp_cdf(x, GpParams(0.5, 0.25))).statistic
        assert ks < 0.005

    def test_breiman_tail_ratio(self):
        # P(Y>y) / P(1/L>y) should drift toward E(Ytilde^beta2) = G(b1+b2)/G(b1)
        rng = np.random.default_rng(31)
        b1, b2 = 2.0, 3.0
        lam = rng.gamma(shape=b2, scale=1.0, size=4_000_000)
        ytil = rng.gamma(shape=b1, scale=1.0, size=4_000_000)
        y = ytil / lam
        target = math.exp(special.gammaln(b1 + b2) - special.gammaln(b1))
        qs = np.quantile(y, [0.9, 0.99, 0.999])
        ratios = [np.mean(y > q) / np.mean(1.0 / lam > q) for q in qs]
        gaps = np.abs(np.array(ratios) / target - 1.0)
        assert gaps[-1] < gaps[0]
        assert gaps[-1] < 0.25

    def test_cdf_monotone(self):
        params = GammaGammaParams(0.9, 6.0, 1.5)
        y = np.linspace(0.0, 100.0, 500)
        vals = gamma_gamma_cdf(y, params)
        assert np.all(np.diff(vals) >= 0.0)
        assert vals[0] == 0.0


class TestWeibullTailAlgebra:
    def test_symmetric_index(self):
        out = weibull_tail_combine(WeibullTail(1.0, 1.0), WeibullTail(1.0, 1.0))
        assert_allclose(out.index, 0.5, rtol=1e-12)
        assert_allclose(out.rate, 2.0, rtol=1e-12)

    def test_gamma_gig_index(self):
        # powered factors both have Weibull index 1/k; k=2 combines to 1/4
        k = 2.0
        out = weibull_tail_combine(WeibullTail(1.0, 1.0 / k), WeibullTail(1.0, 1.0 / k))
        assert_allclose(out.index, 1.0 / (2.0 * k), rtol=1e-12)

    def test_symmetry_of_rate(self):
        a = WeibullTail(2.3, 1.4)
        b = WeibullTail(0.7, 0.9)
        ab = weibull_tail_combine(a, b)
        ba = weibull_tail_combine(b, a)
        assert_allclose(ab.rate, ba.rate, rtol=1e-12)
        assert_allclose(ab.index, ba.index, rtol=1e-12)

    def test_exponential_product_exact_tail(self):
        # X, W iid Exp(1): P(XW > y) = 2 sqrt(y) K_1(2 sqrt(y)); the slope of
        # -log P against sqrt(y) far out recovers the combined rate 2
        out = weibull_tail_combine(WeibullTail(1.0, 1.0), WeibullTail(1.0, 1.0))
        surv = lambda y: math.log(2.0 * math.sqrt(y)) + math.log(special.kve(1.0, 2.0 * math.sqrt(y))) - 2.0 * math.sqrt(y)
        y1, y2 = 1e4, 9e4
        slope = (surv(y1) - surv(y2)) / (math.sqrt(y2) - math.sqrt(y1))
        assert_allclose(slope, out.rate, rtol=5e-3)

    def test_exponential_product_monte_carlo(self):
        rng = np.random.default_rng(37)
        x = rng.exponential(size=10_000_000)
        w = rng.exponential(size=10_000_000)
        y = 16.0
        p_hat = np.mean(x * w > y)
        p_exact = 2.0 * math.sqrt(y) * special.kv(1.0, 2.0 * math.sqrt(y))
        se = math.sqrt(p_exact * (1.0 - p_exact) / x.size)
        assert abs(p_hat - p_exact) < 4.0 * se


class TestGammaGigSampling:
    def test_boundary_matches_gamma_gamma(self):
        rng = np.random.default_rng(41)
        params = GammaGammaParams(alpha=1.2, beta1=2.0, beta2=1.8)
        draws = gamma_gig_sample(1.0, 2.0, GigParams(a=2.0 * 1.2, b=0.0, beta=1.8), rng, size=200_000)
        ks = stats.kstest(draws, lambda x: gamma_gamma_cdf(x, params)).statistic
        assert ks < 0.005

    def test_positive(self):
        rng = np.random.default_rng(43)
        draws = gamma_gig_sample(2.0, 1.5, GigParams(1.0, 1.0, 0.5), rng, size=1000)
        assert np.all(draws > 0.0)

    def test_tail_linear_in_y_power(self):
        # for b>0 the log-survival is asymptotically linear in y^(1/(2k))
        rng = np.random.default_rng(47)
        k = 2.0
        draws = gamma_gig_sample(k, 1.0, GigParams(2.0, 1.0, 0.5), rng, size=10_000_000)
        probs = np.array([1e-2, 1e-3, 1e-4, 1e-5])
        qs = np.quantile(draws, 1.0 - probs)
        x = qs ** (1.0 / (2.0 * k))
        slopes = np.diff(-np.log(probs)) / np.diff(x)
        assert np.all(slopes > 0.0)
        spread = slopes.max() / slopes.min()
        assert spread < 1.35
