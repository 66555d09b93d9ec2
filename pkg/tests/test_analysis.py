import math

import numpy as np
import pytest
import sympy as sp

from subgmean import analysis as an
from subgmean.distributions import DistributionSpec, sample_distribution
from subgmean.exceptions import NonpositiveLogArgument, OutOfRange, UnsupportedDistribution

GRID = np.linspace(an.V_MIN, an.V_MAX, 1000)


class TestCoefficients:
    def test_special_case(self):
        c = an.inequality_coefficients(0.05)
        assert (c.a, c.b) == (0.75, math.sqrt(3))

    def test_root_formula_at_lower_end(self):
        assert 1.003 <= float(an.quadratic_root_a(0.05)) < 1.005

    def test_residual_and_b(self):
        for v in GRID[1:]:
            _, a, b = an.inequality_coefficients(float(v))
            assert abs(math.sqrt(v) * (a * a - 12) + math.sqrt(6) * a) <= 1e-12
            assert b == 3 - a * a / 2
            assert 0 < a < math.sqrt(12)

    def test_a_increasing(self):
        assert np.all(np.diff(an.quadratic_root_a(GRID[1:])) > 0)

    @pytest.mark.parametrize("v", [0.049, 55.6, -1.0])
    def test_out_of_range(self, v):
        with pytest.raises(OutOfRange):
            an.inequality_coefficients(v)


class TestGap:
    def test_zero_at_origin(self):
        for v in (0.05, 1.0, 55.5):
            _, a, b = an.inequality_coefficients(v)
            assert an.inequality_gap(v, a, b, 0.0) == 0.0

    def test_special_case_at_minus_one(self):
        a, b = 0.75, math.sqrt(3)
        rhs = math.log(1 - 0.75 + 0.05 * (-3 + 0.75 * math.sqrt(6) / math.sqrt(0.05) - math.sqrt(3)))
        gap = an.inequality_gap(0.05, a, b, -1.0)
        assert gap == pytest.approx(rhs + math.sqrt(3), abs=1e-14)
        assert gap > 0

    def test_nonpositive_argument(self):
        with pytest.raises(NonpositiveLogArgument) as info:
            an.inequality_gap(1.0, 1.0, 10.0, -3.0)
        assert info.value.y == -3.0

    def test_unit_v_hat_full_grid(self):
        rep = an.certify_inequality([1.0])
        assert rep.passed and rep.min_gap >= -1e-9

    def test_corrupted_b_fails(self):
        rep = an.certify_inequality([1.0], corrupt_b=0.5)
        assert not rep.passed
        assert rep.min_gap < -1e-9

    def test_special_case_certificate(self):
        assert an.certify_inequality([0.05]).passed

    def test_report_text(self):
        rep = an.certify_inequality([0.3, 7.0], (-5, 5), 1e-2)
        lines = rep.to_text().splitlines()
        assert [ln.split(" = ")[0] for ln in lines] == ["min_gap", "min_log_argument", "worst_v_hat", "worst_y", "passed"]
        assert rep.to_text() == an.certify_inequality([0.3, 7.0], (-5, 5), 1e-2).to_text()

    def test_worker_count_does_not_change_report(self):
        grid = np.linspace(0.05, 55.5, 12)
        assert an.certify_inequality(grid, (-3, 3), 1e-2, workers=3) == an.certify_inequality(grid, (-3, 3), 1e-2)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            an.certify_inequality([])
        with pytest.raises(OutOfRange):
            an.certify_inequality([60.0])


class TestDerivativeIdentity:
    def test_symbolic_factorization(self):
        a, y = sp.symbols("a y", positive=True)
        C = 3 * a**2 / (12 - a**2)
        b = 3 - a**2 / 2
        direct = (a + 2 * y * C) / (1 + a * y + C * y**2) - a + 3 * a * y**2 + 2 * b * y
        denom = y**2 + (4 / a - a / 3) * y + 4 / a**2 - sp.Rational(1, 3)
        factored = 3 * a * y * (y + 2 / a) * (y + 2 / a - a / 3) ** 2 / denom
        assert sp.simplify(direct - factored) == 0
        # discriminant of the denominator quadratic
        assert sp.simplify(sp.discriminant(denom, y) - (a**2 - 12) / 9) == 0

    def test_curvature_closed_form(self):
        for v in (0.1, 1.0, 30.0):
            _, a, b = an.inequality_coefficients(v)
            assert an._curvature(v, a, b) == pytest.approx(3 * a * a / (12 - a * a), rel=1e-12)

    def test_prefactor_differs_from_inverse_square_form(self):
        # 3a versus 1/(3a^2): the two candidate prefactors differ by the factor 9a^3
        v, y = 2.0, 0.4
        a = float(an.quadratic_root_a(v))
        chk = an.gap_derivative_identity(v, y)
        alt = chk.factored / (3 * a) / (3 * a * a)
        assert chk.direct == pytest.approx(chk.factored, abs=1e-12)
        assert chk.direct / alt == pytest.approx(9 * a**3, rel=1e-12)

    def test_zero_points(self):
        assert an.gap_derivative_identity(1.0, 0.0)[:2] == (0.0, 0.0)
        for v in GRID[1:]:
            a = float(an.quadratic_root_a(v))
            y0 = a / 3 - 2 / a
            if -1 < y0 < 1:
                d, f, _ = an.gap_derivative_identity(float(v), y0)
                assert abs(d) < 1e-12 and abs(f) < 1e-12

    def test_random_points(self, rng):
        for _ in range(300):
            chk = an.gap_derivative_identity(float(rng.uniform(0.0501, 55.5)), float(rng.uniform(-0.999, 0.999)))
            assert abs(chk.direct - chk.factored) <= 1e-8
            assert chk.denominator > 0

    def test_domain(self):
        with pytest.raises(OutOfRange):
            an.gap_derivative_identity(0.05, 0.1)
        with pytest.raises(OutOfRange):
            an.gap_derivative_identity(1.0, 1.0)


class TestNegOneReduction:
    def test_holds_on_grid(self):
        for v in GRID[1:]:
            lhs, rhs = an.neg_one_reduction(float(v))
            assert lhs <= rhs

    def test_equals_direct_evaluation(self):
        for v in (0.1, 3.0, 55.5):
            _, a, b = an.inequality_coefficients(v)
            lhs, rhs = an.neg_one_reduction(v)
            assert lhs == pytest.approx(-b)
            assert rhs == pytest.approx(math.log(float(an.log_argument(v, a, b, -1.0))), rel=1e-12)


class TestChernoffDirection:
    def test_lower_end(self):
        d = an.chernoff_direction(0.05, 1000, 1e-3)
        assert d.d_mu == pytest.approx(math.sqrt(3.75 * math.log(1000) / 1000), rel=1e-12)
        assert d.d_alpha == pytest.approx(math.sqrt(3))

    def test_upper_end(self):
        assert an.chernoff_direction(55.5, 50, 0.2) == (0.0, -4.0)

    def test_consistency_and_bounds(self):
        n, delta = 5000, 1e-4
        L = math.log(1 / delta)
        for v in GRID[:-1]:
            d = an.chernoff_direction(float(v), n, delta)
            a = an.inequality_coefficients(float(v)).a
            assert d.d_mu * math.sqrt(n / L) == pytest.approx(a / math.sqrt(3 * v), rel=1e-12)
            assert d.d_mu >= 0
            assert d.d_mu * math.sqrt(n / L) <= 10 and abs(d.d_alpha) <= 10


class TestMomentBound:
    def test_rademacher_exact(self):
        mb = an.moment_factor_bound(DistributionSpec("rademacher"), 1.0, 10_000, 1e-3)
        assert mb.allowance == 0 and mb.lhs <= mb.rhs

    def test_two_point_exact(self):
        mb = an.moment_factor_bound(DistributionSpec("two_point_skew", 0.01), 0.5, 10_000, 1e-3)
        assert mb.allowance == 0 and mb.lhs <= mb.rhs

    def test_rademacher_closed_form(self):
        n, delta, v = 10_000, 1e-3, 1.0
        d = an.chernoff_direction(v, n, delta)
        alpha = math.log(1000) / (3 * n * v)
        expected = math.cosh(d.d_mu * (1 - alpha)) * math.exp(-d.d_alpha * alpha)
        mb = an.moment_factor_bound(DistributionSpec("rademacher"), v, n, delta)
        assert mb.lhs == pytest.approx(expected, rel=1e-14)

    def test_quadrature_against_scipy(self):
        from scipy import integrate, stats
        n, delta, v = 10_000, 1e-2, 5.0
        d = an.chernoff_direction(v, n, delta)
        alpha = math.log(100) / (3 * n * v)
        cut = 1 / math.sqrt(alpha)

        def g(x):
            m = min(alpha * x * x, 1.0)
            return math.exp(d.d_mu * x * (1 - m) - d.d_alpha * m) * stats.norm.pdf(x)

        inner = integrate.quad(g, -cut, cut, limit=200)[0]
        outer = 2 * stats.norm.sf(cut) * math.exp(-d.d_alpha)
        mb = an.moment_factor_bound(DistributionSpec("gaussian"), v, n, delta)
        assert mb.lhs == pytest.approx(inner + outer, abs=1e-6)

    def test_unstandardized_rejected(self):
        with pytest.raises(UnsupportedDistribution):
            an.moment_factor_bound(DistributionSpec("pareto", 3.5, standardize=False), 1.0, 10_000, 1e-2)

    def test_domain(self):
        with pytest.raises(OutOfRange):
            an.moment_factor_bound(DistributionSpec("gaussian"), 55.5, 10_000, 1e-2)
        with pytest.raises(ValueError):
            an.moment_factor_bound(DistributionSpec("gaussian"), 1.0, 10_000, 1e-2, quadrature_points=100)


class TestThreshold:
    @pytest.mark.parametrize("delta", [1e-2, 1e-4, 1e-8])
    def test_above_base_rate(self, delta):
        tp = an.ThresholdParams(1000, delta)
        assert tp.epsilon_prime > math.sqrt(2 * math.log(1 / delta) / 1000)


class TestProbes:
    def test_no_clamp_slope_matches_derivative(self):
        n, delta = 10_000, 1e-3
        x = sample_distribution(DistributionSpec("gaussian"), n, 1)
        L = math.log(1 / delta)
        grid = np.linspace(0.05, 55.5, 300)
        rep = an.lipschitz_probe(x, delta, grid)
        assert np.max(x * x) * L / (3 * n * 0.05) < 1
        vg = np.sqrt(grid[:-1] * grid[1:])
        expected = -np.sum(x * x) * L / (3 * n) / vg**2
        assert np.allclose(rep.slopes_alpha, expected, rtol=1e-6, atol=0)
        assert rep.max_slope_alpha == pytest.approx(np.max(np.abs(expected)), rel=1e-6)

    def test_slope_within_proof_bound(self):
        # |d psi_alpha / dv| <= (1/v) * sum min(alpha x^2, 1), using the larger end of each cell
        n, delta = 2000, 1e-2
        x = sample_distribution(DistributionSpec("pareto", 3.5), n, 4)
        L = math.log(1 / delta)
        grid = np.linspace(0.05, 55.5, 400)
        rep = an.lipschitz_probe(x, delta, grid)
        bound = np.array([np.minimum(L / (3 * n * v) * x * x, 1).sum() / v for v in grid[:-1]])
        assert np.all(np.abs(rep.slopes_alpha) <= bound * (1 + 1e-9))

    def test_single_point_grid(self):
        x = sample_distribution(DistributionSpec("gaussian"), 500, 2)
        rep = an.lipschitz_probe(x, 0.01, [1.0])
        assert (rep.max_slope_mu, rep.max_slope_alpha) == (0.0, 0.0)
        assert an.kappa_sensitivity_probe(x, 0.01, [0.0]).max_slope == 0.0

    def test_root_outside_range_is_skipped(self):
        x = 100 * sample_distribution(DistributionSpec("gaussian"), 500, 2)
        rep = an.lipschitz_probe(x, 0.01, [1.0, 2.0])
        assert rep.skipped_reason and "outside" in rep.skipped_reason

    def test_kappa_sensitivity_bound(self):
        n, delta = 10_000, 1e-3
        x = sample_distribution(DistributionSpec("student_t", 3.0), n, 8)
        rep = an.kappa_sensitivity_probe(x, delta, np.linspace(-0.1, 0.1, 41))
        assert rep.max_slope <= 10 * math.sqrt(math.log(1 / delta) / n)
        assert not rep.failed

    def test_kappa_reflection(self):
        z = sample_distribution(DistributionSpec("gaussian"), 301, 5)
        x = np.concatenate([z, -z])
        from subgmean.core import estimate_with_kappa
        for k in (0.03, 0.1):
            assert estimate_with_kappa(x, 0.01, k) == pytest.approx(-estimate_with_kappa(x, 0.01, -k), abs=1e-13)

    def test_kappa_failures_reported(self):
        # budget log(25)/3 > 1 cannot be met when only one sample differs from kappa = 1
        rep = an.kappa_sensitivity_probe([1.0, 1.0, 1.0, 2.0], 0.04, [1.0, 1.5, 2.0])
        assert [k for k, _ in rep.failed] == [1.0]
        assert rep.max_slope > 0
