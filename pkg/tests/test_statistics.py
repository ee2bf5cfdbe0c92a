from itertools import combinations, product

import numpy as np
import pytest

from weakstat import (
    Kernel,
    RidgeProblem,
    SeededRng,
    f_zeta,
    f_zeta_weight,
    constant_weight,
    indicator_loss,
    kmeans_loss,
    l_statistic,
    product_kernel,
    ramp_loss,
    ridge_error,
    ridge_solution,
    sample_mean,
    smoothed_auc,
    u_statistic,
    unit_interval,
    v_statistic,
)
from weakstat.statistics import (
    probe_kernel_lipschitz,
    probe_loss_function,
    probe_weight_function,
)


class TestSampleMean:
    def test_plain_average(self):
        assert sample_mean([0.1, 0.2, 0.3, 0.4]) == pytest.approx(0.25)

    def test_constant_input(self):
        assert sample_mean([0.7] * 5) == pytest.approx(0.7)

    def test_two_points(self):
        assert sample_mean([0.0, 1.0]) == 0.5

    def test_rejects_vector_rows(self):
        with pytest.raises(ValueError):
            sample_mean(np.ones((3, 2)))


class TestVStatistic:
    def test_arity_one_reduces_to_mean(self):
        k = Kernel(1, lambda a: a[..., 0], 1.0, 1.0)
        assert v_statistic(k, [1.0, 2.0, 3.0]) == pytest.approx(2.0)

    def test_product_kernel_all_ordered_pairs(self):
        x = [1.0, 2.0, 3.0]
        # oracle: enumerate the 9 ordered pairs directly
        expected = sum(a * b for a, b in product(x, repeat=2)) / 9
        assert expected == pytest.approx(4.0)
        assert v_statistic(product_kernel(), x) == pytest.approx(expected)

    def test_zero_kernel(self):
        k = Kernel(2, lambda a, b: np.zeros(np.asarray(a).shape[:-1]), 0.0, 0.0)
        assert v_statistic(k, [1.0, 2.0, 3.0]) == 0.0

    def test_arity_error(self):
        with pytest.raises(ValueError, match="arity"):
            v_statistic(product_kernel(), [1.0])

    def test_per_index_kernel_family(self):
        kernels = {
            (0,): Kernel(1, lambda a: a[..., 0], 1.0, 1.0),
            (1,): Kernel(1, lambda a: 2.0 * a[..., 0], 2.0, 2.0),
        }
        # (x0 + 2 x1) / 2 by direct expansion
        assert v_statistic(kernels, [3.0, 5.0]) == pytest.approx((3.0 + 10.0) / 2)


class TestUStatistic:
    def test_product_kernel_increasing_pairs(self):
        x = [1.0, 2.0, 3.0]
        expected = sum(a * b for a, b in combinations(x, 2)) / 3
        assert expected == pytest.approx(11.0 / 3.0)
        assert u_statistic(product_kernel(), x) == pytest.approx(expected)

    def test_arity_one_is_mean(self):
        k = Kernel(1, lambda a: a[..., 0], 1.0, 1.0)
        x = SeededRng(0).generator().uniform(size=7)
        assert u_statistic(k, x) == pytest.approx(sample_mean(x))

    def test_full_arity_single_term(self):
        k = Kernel(3, lambda a, b, c: (a + b + c)[..., 0], 1.0, 1.0)
        assert u_statistic(k, [0.1, 0.2, 0.3]) == pytest.approx(0.6)

    def test_symmetric_kernel_permutation_invariance(self):
        gen = SeededRng(4).generator()
        x = gen.uniform(size=6)
        base = u_statistic(product_kernel(), x)
        for _ in range(10):
            assert u_statistic(product_kernel(), gen.permutation(x)) == pytest.approx(base)

    def test_u_equals_v_for_arity_one(self):
        k = Kernel(1, lambda a: np.sin(a[..., 0]), 1.0, 2.0)
        x = SeededRng(8).generator().uniform(size=9)
        assert u_statistic(k, x) == pytest.approx(v_statistic(k, x))


class TestSmoothedAuc:
    def test_separated_blocks(self):
        assert smoothed_auc(ramp_loss(), [1.0, 1.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_mixed_blocks(self):
        # oracle: pair differences are 0.5, 1, 0.5, 1 under the ramp
        assert smoothed_auc(ramp_loss(), [1.0, 1.0, 0.5, 0.0]) == pytest.approx(0.75)

    def test_zero_loss(self):
        zero = ramp_loss()
        zero = type(zero)(lambda t: np.zeros_like(np.asarray(t, dtype=float)), 0.0, True)
        assert smoothed_auc(zero, [0.3, 0.4, 0.1, 0.2]) == 0.0

    def test_odd_size_rejected(self):
        with pytest.raises(ValueError, match="even"):
            smoothed_auc(ramp_loss(), [1.0, 2.0, 3.0])

    def test_surrogate_below_indicator_wilcoxon(self):
        gen = SeededRng(12).generator()
        for _ in range(50):
            x = gen.uniform(size=8)
            assert smoothed_auc(ramp_loss(), x) <= smoothed_auc(indicator_loss(), x) + 1e-12


class TestLStatistic:
    def test_constant_weight_is_mean(self):
        x = SeededRng(3).generator().uniform(size=11)
        assert l_statistic(constant_weight(1.0), x) == pytest.approx(sample_mean(x))

    def test_step_weight_drops_top_quartile(self):
        # oracle: direct formula (1/4) * (4/3) * (0.1 + 0.2 + 0.3), top value weighted 0
        assert l_statistic(f_zeta_weight(0.0), [0.1, 0.2, 0.3, 0.9]) == pytest.approx(0.2)

    def test_permutation_invariance(self):
        gen = SeededRng(5).generator()
        x = gen.uniform(size=9)
        F = f_zeta_weight(0.25)
        assert l_statistic(F, gen.permutation(x)) == pytest.approx(l_statistic(F, x))

    def test_direct_formula_oracle(self):
        gen = SeededRng(6).generator()
        F = f_zeta_weight(0.125)
        for _ in range(20):
            x = gen.uniform(size=10)
            s = np.sort(x)
            expected = sum(float(f_zeta((i + 1) / 10, 0.125)) * s[i] for i in range(10)) / 10
            assert l_statistic(F, x) == pytest.approx(expected)

    def test_monotone_in_each_coordinate_for_nonnegative_weight(self):
        gen = SeededRng(7).generator()
        F = f_zeta_weight(0.25)
        for _ in range(40):
            x = gen.uniform(size=8)
            base = l_statistic(F, x)
            i = int(gen.integers(8))
            bumped = x.copy()
            bumped[i] = min(1.0, bumped[i] + gen.uniform(0, 0.3))
            assert l_statistic(F, bumped) >= base - 1e-12


class TestFZeta:
    def test_plateau_value(self):
        assert f_zeta(0.5, 0.25) == pytest.approx(4.0 / 3.0)

    def test_ramp_midpoint(self):
        assert f_zeta(0.75, 0.25) == pytest.approx(2.0 / 3.0)

    def test_ramp_endpoint(self):
        assert f_zeta(1.0, 0.25) == 0.0

    def test_continuity_at_branch_points(self):
        for zeta in (0.05, 0.125, 0.25):
            lo, hi = 0.75 - zeta, 0.75 + zeta
            assert f_zeta(lo, zeta) == pytest.approx(4.0 / 3.0)
            assert f_zeta(lo + 1e-9, zeta) == pytest.approx(4.0 / 3.0, abs=1e-6)
            assert f_zeta(hi, zeta) == pytest.approx(0.0, abs=1e-12)

    def test_step_weight_at_zero_zeta(self):
        assert f_zeta(0.75, 0.0) == pytest.approx(4.0 / 3.0)
        assert f_zeta(0.7500001, 0.0) == 0.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            f_zeta(1.2, 0.1)
        with pytest.raises(ValueError):
            f_zeta(0.5, 0.3)


class TestKmeansLoss:
    def test_single_center(self):
        assert kmeans_loss([[0.0, 0.0]], [3.0, 4.0]) == pytest.approx(25.0)

    def test_point_on_center(self):
        assert kmeans_loss([[1.0, 2.0], [0.0, 0.0]], [1.0, 2.0]) == 0.0

    def test_min_over_centers(self):
        assert kmeans_loss([[0.0, 0.0], [1.0, 0.0]], [0.9, 0.0]) == pytest.approx(0.01)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            kmeans_loss([[0.0, 0.0]], [1.0, 2.0, 3.0])


class TestRidge:
    def test_scalar_closed_form(self):
        # w = 1/(1 + lam) when all z=1, y=1
        for lam in (0.01, 0.5, 0.99):
            prob = RidgeProblem(lam=lam, d=1)
            x = np.column_stack([np.ones(6), np.ones(6)])
            assert ridge_solution(x, prob)[0] == pytest.approx(1.0 / (1.0 + lam))

    def test_zero_targets_zero_solution(self):
        prob = RidgeProblem(lam=0.3, d=2)
        gen = SeededRng(10).generator()
        Z = gen.uniform(-0.5, 0.5, size=(8, 2))
        x = np.column_stack([Z, np.zeros(8)])
        assert np.allclose(ridge_solution(x, prob), 0.0)
        assert ridge_error(x, prob) == 0.0

    def test_error_matches_residuals(self):
        prob = RidgeProblem(lam=0.5, d=2)
        gen = SeededRng(11).generator()
        Z = gen.uniform(-0.5, 0.5, size=(10, 2))
        y = gen.uniform(-1, 1, size=10)
        x = np.column_stack([Z, y])
        w = ridge_solution(x, prob)
        assert ridge_error(x, prob) == pytest.approx(float(np.mean((Z @ w - y) ** 2)))

    def test_scalar_error_value(self):
        prob = RidgeProblem(lam=0.5, d=1)
        x = np.column_stack([np.ones(4), np.ones(4)])
        # residual (2/3 - 1)^2 from the scalar closed form
        assert ridge_error(x, prob) == pytest.approx(1.0 / 9.0)

    def test_error_bounded_by_zero_predictor(self):
        prob = RidgeProblem(lam=0.2, d=3)
        gen = SeededRng(12).generator()
        for _ in range(10):
            Z = gen.uniform(-0.5, 0.5, size=(12, 3))
            y = gen.uniform(-1, 1, size=12)
            x = np.column_stack([Z, y])
            assert ridge_error(x, prob) <= float(np.mean(y * y)) + 1e-12

    def test_lambda_range_enforced(self):
        with pytest.raises(ValueError):
            RidgeProblem(lam=0.0, d=1)
        with pytest.raises(ValueError):
            RidgeProblem(lam=1.0, d=1)


class TestProbes:
    def test_product_kernel_constants_hold(self):
        worst = probe_kernel_lipschitz(product_kernel(), unit_interval(), SeededRng(1))
        assert worst <= 1.0 + 1e-9

    def test_trimming_weight_norms_hold(self):
        F = f_zeta_weight(0.25)
        sup, lip = probe_weight_function(F, SeededRng(2))
        assert sup <= F.sup_norm + 1e-9
        assert lip <= F.lip_norm + 1e-9

    def test_ramp_loss_certificates_hold(self):
        excess, lip, below = probe_loss_function(ramp_loss(), SeededRng(3))
        assert excess == 0.0
        assert lip <= 1.0 + 1e-9
        assert below
