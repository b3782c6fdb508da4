import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from helpers import (
    assert_same_law,
    cumulant_se_from_theory,
    empirical_chf,
    gpp_cumulant_any_order,
    stat_and_se,
)
from vgpp.distributions import RngStream
from vgpp.gammapp import (
    GammaPPParams,
    atom_weight,
    backward_values,
    bridge,
    chf,
    continuous_density,
    cumulant,
    density,
    forward_values,
    jump_intensity,
    levy_density,
    levy_triplet,
    path_backward,
    path_forward,
    sample_cp,
    sample_polya,
    sample_polya_with_count,
)

P = GammaPPParams(a=0.7, alpha=5.0, beta=15.0)


class TestChf:
    def test_normalization_at_zero(self):
        assert chf(P, 1.0, 0.0) == pytest.approx(1.0)

    def test_degenerate_as_a_to_one(self):
        almost = GammaPPParams(a=1.0 - 1e-12, alpha=5.0, beta=15.0)
        for u in (-3.0, 0.5, 7.0):
            assert chf(almost, 1.0, u) == pytest.approx(1.0, abs=1e-9)

    def test_self_decomposability_identity(self):
        # gamma chf factors into its a-scaled copy times the residual chf
        gamma_chf = lambda u: (P.beta / (P.beta - 1j * u)) ** P.alpha
        for u in np.linspace(-10, 10, 41):
            lhs = gamma_chf(u)
            rhs = gamma_chf(P.a * u) * chf(P, 1.0, u)
            assert abs(lhs - rhs) < 1e-12

    def test_modulus_below_one_and_matches_samples(self):
        val = chf(P, 1.0, 1.0)
        assert abs(val) < 1.0
        draws = sample_polya(P, 1.0, RngStream(10), size=400_000)
        for u in (1.0, -3.0, 5.0):
            emp, se_re, se_im = empirical_chf(draws, u)
            theo = chf(P, 1.0, u)
            assert abs(emp.real - theo.real) < 3 * se_re
            assert abs(emp.imag - theo.imag) < 3 * se_im


class TestDensity:
    def test_atom_weight(self):
        assert atom_weight(GammaPPParams(0.5, 2.0, 1.0), 1.0) == pytest.approx(0.25)

    def test_total_mass(self):
        d = density(P, 1.0)
        mass, err = quad(d.continuous, 0, 50.0 / P.beta * 10, limit=300)
        assert d.atom_weight + mass == pytest.approx(1.0, abs=1e-8)

    def test_negative_argument_gives_zero(self):
        assert continuous_density(P, 1.0, -0.3) == 0.0

    def test_matches_monte_carlo_histogram(self):
        draws = sample_polya(P, 1.0, RngStream(11), size=1_000_000)
        d = density(P, 1.0)
        h = 0.01
        for x0 in (0.05, 0.1, 0.2):
            inside = (draws >= x0 - h) & (draws <= x0 + h)
            p_hat = inside.mean()
            se = np.sqrt(p_hat * (1 - p_hat) / len(draws))
            p_theo = quad(d.continuous, x0 - h, x0 + h)[0]
            assert abs(p_hat - p_theo) < 3 * se


class TestLevyTriplet:
    def test_total_mass_is_jump_intensity(self):
        p = GammaPPParams(a=0.5, alpha=10.0, beta=15.0)
        assert jump_intensity(p) == pytest.approx(6.93147, abs=1e-5)
        mass, _ = quad(lambda x: levy_density(p, x), 1e-12, 60.0 / p.beta, limit=400)
        assert mass == pytest.approx(jump_intensity(p), abs=1e-6)

    def test_density_nonnegative(self):
        xs = np.logspace(-6, 1, 200)
        assert np.all(levy_density(P, xs) >= 0)
        with pytest.raises(ValueError):
            levy_density(P, 0.0)

    def test_drift_equals_truncated_first_moment(self):
        t = levy_triplet(P)
        assert t.diffusion == 0.0
        integral, _ = quad(lambda x: x * levy_density(P, x), 0, 1, limit=200,
                           epsabs=1e-13, epsrel=1e-13)
        assert t.drift == pytest.approx(integral, abs=1e-10)


class TestCumulants:
    def test_first_cumulant(self):
        assert cumulant(P, 1.0, 1) == pytest.approx(0.1)

    def test_small_a_limit_is_gamma_variance(self):
        p = GammaPPParams(a=1e-14, alpha=5.0, beta=15.0)
        assert cumulant(p, 1.0, 2) == pytest.approx(5.0 / 15.0**2, rel=1e-10)

    def test_fourth_cumulant_value(self):
        assert cumulant(P, 1.0, 4) == pytest.approx(6 * 5 * (1 - 0.7**4) / 15.0**4, rel=1e-12)

    def test_order_out_of_range(self):
        with pytest.raises(ValueError):
            cumulant(P, 1.0, 5)

    def test_residual_scaling_of_gamma_cumulants_vs_samples(self):
        # c_n = (1 - a^n) * (n-1)! alpha t / beta^n against sample cumulants
        draws = sample_polya(P, 1.0, RngStream(12), size=1_000_000)
        ctheo = lambda j: gpp_cumulant_any_order(P.a, P.alpha, P.beta, 1.0, j)
        for order, name in ((1, "c1"), (2, "c2"), (3, "c3"), (4, "c4")):
            est, _ = stat_and_se(draws, name)
            se = cumulant_se_from_theory(ctheo, len(draws), order)
            gamma_cum = gpp_cumulant_any_order(0.0, P.alpha, P.beta, 1.0, order)
            closed = (1 - P.a**order) * gamma_cum
            assert cumulant(P, 1.0, order) == pytest.approx(closed, rel=1e-12)
            assert abs(est - closed) < 3 * se, f"order {order}"


class TestForwardSamplers:
    def test_compound_poisson_zero_fraction(self):
        p = GammaPPParams(a=0.5, alpha=10.0, beta=15.0)
        draws = sample_cp(p, 0.1, RngStream(13), size=400_000)
        frac = np.mean(draws == 0.0)
        se = np.sqrt(0.5 * 0.5 / len(draws))
        assert abs(frac - 0.5) < 3 * se

    def test_compound_poisson_mean(self):
        draws = sample_cp(P, 1.0, RngStream(14), size=1_000_000)
        se = np.sqrt(cumulant(P, 1.0, 2) / len(draws))
        assert abs(draws.mean() - cumulant(P, 1.0, 1)) < 3 * se

    def test_two_exact_samplers_agree_in_law(self):
        x = sample_cp(P, 1.0, RngStream(15), size=200_000)
        y = sample_polya(P, 1.0, RngStream(16), size=200_000)
        assert_same_law(x, y)

    def test_erlang_conditional_mean_given_count(self):
        z, s = sample_polya_with_count(P, 1.0, RngStream(17), size=500_000)
        for count in (1, 2, 3):
            sel = z[s == count]
            se = np.sqrt(count * (P.a / P.beta) ** 2 / len(sel))
            assert abs(sel.mean() - count * P.a / P.beta) < 4 * se

    def test_moments_match_closed_form(self):
        draws = sample_polya(P, 1.0, RngStream(18), size=1_000_000)
        ctheo = lambda j: gpp_cumulant_any_order(P.a, P.alpha, P.beta, 1.0, j)
        mean, _ = stat_and_se(draws, "mean")
        var, _ = stat_and_se(draws, "variance")
        assert abs(mean - cumulant(P, 1.0, 1)) < 3 * cumulant_se_from_theory(ctheo, len(draws), 1)
        assert abs(var - cumulant(P, 1.0, 2)) < 3 * cumulant_se_from_theory(ctheo, len(draws), 2)


class TestPaths:
    def test_single_point_grid(self):
        sp = path_forward(P, [0.0], RngStream(19))
        assert sp.z_values.tolist() == [0.0]

    def test_forward_paths_monotone(self):
        z = forward_values(P, np.linspace(0, 1, 13), RngStream(20), 2_000)
        assert np.all(np.diff(z, axis=0) >= 0)

    def test_forward_terminal_law(self):
        z = forward_values(P, np.linspace(0, 1, 5), RngStream(21), 100_000)
        direct = sample_polya(P, 1.0, RngStream(22), size=100_000)
        assert_same_law(z[-1], direct)

    def test_non_monotone_grid_rejected(self):
        with pytest.raises(ValueError):
            forward_values(P, [0.0, 0.5, 0.4], RngStream(1), 10)
        with pytest.raises(ValueError):
            forward_values(P, [0.1, 0.5], RngStream(1), 10)


class TestBridge:
    def test_empty_bridge(self):
        assert bridge(P, 0.3, 1.0, 0.0, 0, RngStream(23)) == (0.0, 0)

    def test_full_count_pins_value(self):
        z_t, s_t = bridge(P, 0.999999, 1.0, 2.5, 3, RngStream(24))
        if s_t == 3:
            assert z_t == 2.5

    def test_all_counts_pin_endpoint(self):
        z_T = np.full(20_000, 1.7)
        s_T = np.full(20_000, 4)
        z_t, s_t = bridge(P, 0.5, 1.0, z_T, s_T, RngStream(25))
        assert np.all(z_t[s_t == 4] == 1.7)
        assert np.all(z_t[s_t == 0] == 0.0)
        inner = (s_t > 0) & (s_t < 4)
        assert np.all((z_t[inner] > 0) & (z_t[inner] < 1.7))

    def test_time_out_of_range(self):
        with pytest.raises(ValueError):
            bridge(P, 1.5, 1.0, 1.0, 1, RngStream(1))

    def test_inconsistent_endpoint_rejected(self):
        with pytest.raises(ValueError):
            bridge(P, 0.5, 1.0, 1.0, 0, RngStream(1))

    def test_bridged_marginal_matches_forward_law(self):
        n = 100_000
        z_T, s_T = sample_polya_with_count(P, 1.0, RngStream(26), size=n)
        z_t, _ = bridge(P, 0.4, 1.0, z_T, s_T, RngStream(27))
        direct = sample_polya(P, 0.4, RngStream(28), size=n)
        assert_same_law(z_t, direct)


class TestBackwardPaths:
    def test_terminal_matches_forward(self):
        z, _ = backward_values(P, [0.0, 1.0], RngStream(29), 100_000)
        direct = sample_polya(P, 1.0, RngStream(30), size=100_000)
        assert_same_law(z[-1], direct)

    def test_paths_monotone(self):
        z, _ = backward_values(P, np.linspace(0, 1, 9), RngStream(31), 5_000)
        assert np.all(np.diff(z, axis=0) >= 0)

    def test_interior_marginals_match_forward(self):
        grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        zb, _ = backward_values(P, grid, RngStream(32), 100_000)
        zf = forward_values(P, grid, RngStream(33), 100_000)
        for j in (1, 2, 3, 4):
            assert_same_law(zb[j], zf[j])

    def test_single_path_wrapper(self):
        sp = path_backward(P, np.linspace(0, 1, 5), RngStream(34))
        assert sp.z_values[0] == 0.0
        assert np.all(np.diff(sp.z_values) >= 0)


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        sp = path_forward(P, np.linspace(0, 1, 6), RngStream(35))
        out = tmp_path / "p.csv"
        sp.to_csv(out)
        back = type(sp).from_csv(out)
        assert np.array_equal(back.grid, sp.grid)
        assert np.array_equal(back.z_values, sp.z_values)

    def test_csv_deterministic_given_seed(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        path_forward(P, np.linspace(0, 1, 6), RngStream(36)).to_csv(a)
        path_forward(P, np.linspace(0, 1, 6), RngStream(36)).to_csv(b)
        assert a.read_bytes() == b.read_bytes()
