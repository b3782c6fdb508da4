import numpy as np
import pytest
from scipy import stats

from vgpp.distributions import (
    PolyaParams,
    RngStream,
    beta_binomial_pmf,
    beta_binomial_sample,
    beta_sample,
    binomial_sample,
    exp_sample,
    gamma_sample,
    normal_sample,
    poisson_sample,
    polya_pmf,
    polya_sample,
)


class TestRngStream:
    def test_same_key_reproduces_bit_exactly(self):
        a = RngStream(123, 4).generator.random(100)
        b = RngStream(123, 4).generator.random(100)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 0).generator.random(100)
        b = RngStream(123, 1).generator.random(100)
        assert not np.array_equal(a, b)

    def test_substreams_are_distinct_and_reproducible(self):
        root = RngStream(7)
        a = root.substream(3).generator.random(50)
        b = root.substream(4).generator.random(50)
        c = RngStream(7).substream(3).generator.random(50)
        assert not np.array_equal(a, b)
        assert np.array_equal(a, c)

    def test_fresh_rewinds(self):
        s = RngStream(9, 2)
        first = s.generator.random(10)
        again = s.fresh().generator.random(10)
        assert np.array_equal(first, again)

    def test_sampler_determinism(self):
        p = PolyaParams(shape=2.5, success_prob=0.4)
        a = polya_sample(p, RngStream(5), size=1000)
        b = polya_sample(p, RngStream(5), size=1000)
        assert np.array_equal(a, b)


class TestPolyaPmf:
    def test_k0_is_survival_of_shape(self):
        assert polya_pmf(PolyaParams(1.0, 0.5), 0) == pytest.approx(0.5)

    def test_direct_evaluation(self):
        # C(2, 1) * 0.7^2 * 0.3 = 2 * 0.49 * 0.3
        assert polya_pmf(PolyaParams(2.0, 0.3), 1) == pytest.approx(0.294)

    def test_real_shape_value(self):
        # shape 1.5, p 0.4, k 3: Gamma(4.5)/Gamma(4)/Gamma(1.5) * 0.6^1.5 * 0.4^3
        from scipy.special import gamma as g

        expected = g(4.5) / (g(4.0) * g(1.5)) * 0.6**1.5 * 0.4**3
        assert polya_pmf(PolyaParams(1.5, 0.4), 3) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("shape,p", [(1.0, 0.5), (2.0, 0.3), (1.5, 0.4), (4.98, 0.54)])
    def test_sums_to_one(self, shape, p):
        k = np.arange(0, 2000)
        assert polya_pmf(PolyaParams(shape, p), k).sum() == pytest.approx(1.0, abs=1e-10)

    def test_large_shape_uses_log_arithmetic(self):
        p = PolyaParams(1255.7, 0.54)
        vals = polya_pmf(p, np.arange(0, 20000))
        assert np.all(np.isfinite(vals))
        assert vals.sum() == pytest.approx(1.0, abs=1e-8)

    def test_invalid_params_raise(self):
        with pytest.raises(ValueError):
            PolyaParams(0.0, 0.5)
        with pytest.raises(ValueError):
            PolyaParams(1.0, 1.0)
        with pytest.raises(ValueError):
            polya_pmf(PolyaParams(1.0, 0.5), -1)


class TestPolyaSample:
    def test_tiny_success_prob_degenerates_at_zero(self):
        draws = polya_sample(PolyaParams(5.0, 1e-12), RngStream(1), size=10_000)
        assert np.all(draws == 0)

    def test_mean_matches_negative_binomial_identity(self):
        p = PolyaParams(5.0, 0.3)
        draws = polya_sample(p, RngStream(2), size=1_000_000)
        mean = 5.0 * 0.3 / 0.7
        var = 5.0 * 0.3 / 0.7**2
        se = np.sqrt(var / len(draws))
        assert abs(draws.mean() - mean) < 3 * se

    def test_daily_zero_probability_at_market_scale(self):
        # shape = alpha * dt at alpha ~ 1.26e3 and one trading day
        shape = 1255.7 / 252
        p = PolyaParams(shape, 0.54)
        assert polya_pmf(p, 0) == pytest.approx(0.46 ** shape, rel=1e-12)
        assert polya_pmf(p, 0) == pytest.approx(0.021, abs=2e-3)
        draws = polya_sample(p, RngStream(3), size=500_000)
        frac = np.mean(draws == 0)
        se = np.sqrt(0.021 * 0.979 / len(draws))
        assert abs(frac - 0.46**shape) < 3 * se

    def test_integer_shape_matches_sum_of_geometrics(self):
        shape, p = 3, 0.45
        draws = polya_sample(PolyaParams(float(shape), p), RngStream(44), size=200_000)
        gen = RngStream(45).generator
        geo = (gen.geometric(1.0 - p, size=(shape, 200_000)) - 1).sum(axis=0)
        # pool everything past a well-populated support into one tail bin
        cut = 15
        c1 = np.bincount(np.minimum(draws, cut))
        c2 = np.bincount(np.minimum(geo, cut))
        assert stats.chi2_contingency(np.vstack([c1, c2])).pvalue > 0.01

    def test_gamma_poisson_mixture_reproduces_pmf(self):
        params = PolyaParams(2.7, 0.35)
        draws = polya_sample(params, RngStream(6), size=200_000)
        hi = int(draws.max()) + 1
        counts = np.bincount(draws, minlength=hi)
        expected = polya_pmf(params, np.arange(hi)) * len(draws)
        # pool the tail so every expected count is comfortably large
        keep = expected >= 10
        obs = np.append(counts[keep], counts[~keep].sum())
        exp = np.append(expected[keep], expected[~keep].sum())
        exp *= obs.sum() / exp.sum()
        assert stats.chisquare(obs, exp).pvalue > 0.01


class TestBetaBinomial:
    def test_k0_returns_zero(self):
        assert beta_binomial_sample(2.0, 3.0, 0, RngStream(1)) == 0

    def test_uniform_case(self):
        pmf = beta_binomial_pmf(1.0, 1.0, 9, np.arange(10))
        assert np.allclose(pmf, 0.1, atol=1e-12)

    def test_pmf_sums_to_one(self):
        pmf = beta_binomial_pmf(2.5, 1.5, 6, np.arange(7))
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)

    def test_sample_matches_pmf(self):
        draws = beta_binomial_sample(2.5, 1.5, 6, RngStream(7), size=1_000_000)
        counts = np.bincount(draws, minlength=7)
        expected = beta_binomial_pmf(2.5, 1.5, 6, np.arange(7)) * len(draws)
        assert stats.chisquare(counts, expected * counts.sum() / expected.sum()).pvalue > 0.01

    def test_negative_count_raises(self):
        with pytest.raises(ValueError):
            beta_binomial_sample(1.0, 1.0, -1, RngStream(1))


class TestBaseSamplers:
    def test_gamma_is_shape_rate(self):
        draws = gamma_sample(5.0, 15.0, RngStream(8), size=1_000_000)
        se = np.sqrt((5.0 / 15.0**2) / len(draws))
        assert abs(draws.mean() - 1.0 / 3.0) < 3 * se

    def test_exponential_rate(self):
        draws = exp_sample(2.0, RngStream(9), size=1_000_000)
        se = 0.5 / np.sqrt(len(draws))
        assert abs(draws.mean() - 0.5) < 3 * se

    def test_poisson_jump_count_mean(self):
        # intensity alpha * t * log(1/a) at a=0.5, alpha=10, t=0.1
        lam = 10 * 0.1 * np.log(2.0)
        assert lam == pytest.approx(0.6931, abs=1e-4)
        draws = poisson_sample(lam, RngStream(10), size=1_000_000)
        se = np.sqrt(lam / len(draws))
        assert abs(draws.mean() - lam) < 3 * se

    def test_normal_variance_parameterization(self):
        draws = normal_sample(1.0, 4.0, RngStream(11), size=500_000)
        assert abs(draws.var() - 4.0) < 0.05

    def test_beta_and_binomial(self):
        b = beta_sample(2.0, 3.0, RngStream(12), size=200_000)
        assert abs(b.mean() - 0.4) < 0.005
        n = binomial_sample(10, 0.25, RngStream(13), size=200_000)
        assert abs(n.mean() - 2.5) < 0.02

    @pytest.mark.parametrize("call", [
        lambda r: gamma_sample(-1.0, 1.0, r),
        lambda r: gamma_sample(1.0, 0.0, r),
        lambda r: exp_sample(-2.0, r),
        lambda r: normal_sample(0.0, 0.0, r),
        lambda r: beta_sample(0.0, 1.0, r),
        lambda r: binomial_sample(-1, 0.5, r),
        lambda r: poisson_sample(-0.5, r),
    ])
    def test_bad_parameters_raise(self, call):
        with pytest.raises(ValueError):
            call(RngStream(1))
