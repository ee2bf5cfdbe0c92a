import numpy as np
import pytest

from weakstat import (
    ComplexityEstimate,
    FunctionClass,
    InapplicableCertificateError,
    LossFunction,
    SeededRng,
    box,
    center_matching_error,
    clustering_certificate,
    constant_weight,
    f_zeta,
    gaussian_mixture_with_noise,
    linear_ranker_class,
    select_ranker,
    trimmed_kmeans,
    two_block_ranking_space,
    uniform_raw_space,
    weighted_rank_kmeans,
)
from weakstat.applications import UnboundedLipschitzError

TRUE_CENTERS = np.array([[3.0, 0.0], [-1.5, 2.6], [-1.5, -2.6]])


def _g(mean, se=0.0):
    return ComplexityEstimate(mean=mean, std_error=se, replicates=4, kind="gaussian")


class TestTrimmedKmeans:
    def test_identical_points_single_cluster(self):
        data = np.tile([2.0, -1.0], (12, 1))
        res = trimmed_kmeans(data, 1, 0.125, restarts=2, rng=SeededRng(0))
        assert np.allclose(res.centers[0], [2.0, -1.0])
        assert res.objective == pytest.approx(0.0, abs=1e-12)

    def test_hard_trimming_ignores_far_outliers(self):
        gen = SeededRng(1).generator()
        inliers = gen.normal(0.0, 0.05, size=(30, 2))
        outliers = np.tile([50.0, 50.0], (10, 1))  # exactly the top quartile
        data = np.vstack([inliers, outliers])
        res = trimmed_kmeans(data, 1, 0.0, restarts=4, rng=SeededRng(2))
        # oracle: at the fixed point the center is the step-weighted mean of
        # the 30 nearest points, i.e. the plain mean of the inliers
        assert np.linalg.norm(res.centers[0] - inliers.mean(axis=0)) < 0.05
        # the objective never sees the outlier losses (weights are zero there)
        assert res.objective < 1.0

    def test_hard_trimming_matches_direct_weighted_mean(self):
        gen = SeededRng(3).generator()
        data = gen.uniform(-1, 1, size=(16, 2))
        res = trimmed_kmeans(data, 1, 0.0, restarts=1, max_iters=200, rng=SeededRng(4))
        # recompute the fixed point directly from the final assignment
        losses = np.sum((data - res.centers[0]) ** 2, axis=1)
        order = np.argsort(losses, kind="stable")
        w = np.empty(16)
        w[order] = [float(f_zeta((i + 1) / 16, 0.0)) for i in range(16)]
        direct = (data * w[:, None]).sum(axis=0) / w.sum()
        assert np.allclose(res.centers[0], direct, atol=1e-8)

    def test_matches_plain_kmeans_on_tight_clean_clusters(self):
        gen = SeededRng(5).generator()
        centers = TRUE_CENTERS
        data = np.vstack([
            c + 1e-8 * gen.standard_normal((40, 2)) for c in centers
        ])
        data = data[gen.permutation(len(data))]
        trimmed = trimmed_kmeans(data, 3, 0.0, restarts=8, rng=SeededRng(6))
        plain = weighted_rank_kmeans(data, 3, constant_weight(1.0), restarts=8,
                                     rng=SeededRng(6))
        assert center_matching_error(trimmed.centers, plain.centers) <= 1e-6

    def test_history_is_nonincreasing(self):
        data = gaussian_mixture_with_noise(120, TRUE_CENTERS, 0.4, 0.25, 6.0, SeededRng(7))
        res = trimmed_kmeans(data, 3, 0.125, restarts=6, rng=SeededRng(8))
        hist = np.array(res.history)
        assert np.all(np.diff(hist) <= 1e-12)

    def test_centers_stay_in_data_ball(self):
        data = gaussian_mixture_with_noise(100, TRUE_CENTERS, 0.4, 0.25, 6.0, SeededRng(9))
        res = trimmed_kmeans(data, 3, 0.125, restarts=4, rng=SeededRng(10))
        radius = np.linalg.norm(data, axis=1).max()
        assert np.all(np.linalg.norm(res.centers, axis=1) <= radius + 1e-9)

    def test_shape_errors(self):
        data = np.zeros((4, 2))
        with pytest.raises(ValueError):
            trimmed_kmeans(data, 5, 0.1)
        with pytest.raises(ValueError):
            trimmed_kmeans(data, 1, 0.5)

    def test_noise_robustness_smoke(self):
        # small-sample version of the benchmark property; the 50-seed run
        # lives in the acceptance suite
        tr, pl = [], []
        for seed in range(5):
            data = gaussian_mixture_with_noise(240, TRUE_CENTERS, 0.35, 0.25, 6.0,
                                               SeededRng(seed, 20))
            a = trimmed_kmeans(data, 3, 0.125, restarts=10, rng=SeededRng(seed, 21))
            b = weighted_rank_kmeans(data, 3, constant_weight(1.0), restarts=10,
                                     rng=SeededRng(seed, 22))
            tr.append(center_matching_error(a.centers, TRUE_CENTERS))
            pl.append(center_matching_error(b.centers, TRUE_CENTERS))
        assert float(np.median(tr)) < float(np.median(pl))


class TestClusteringCertificate:
    def _result(self):
        data = gaussian_mixture_with_noise(60, TRUE_CENTERS, 0.4, 0.2, 6.0, SeededRng(11))
        return trimmed_kmeans(data, 3, 0.25, restarts=2, rng=SeededRng(12))

    def test_trimming_slope_enters_second_order_term(self):
        res = self._result()
        cert = clustering_certificate(res, ball_radius=6.0, zeta=0.25, n=60,
                                      g=_g(1.0), delta=0.1)
        diam = (2.0 * 6.0) ** 2
        assert cert.seminorms.j_lip == pytest.approx(diam * (8.0 / 3.0) / 60)

    def test_step_weight_is_refused(self):
        res = self._result()
        with pytest.raises(UnboundedLipschitzError):
            clustering_certificate(res, 6.0, 0.0, 60, _g(1.0), 0.1)

    def test_vanishing_complexity_and_tail(self):
        res = self._result()
        cert = clustering_certificate(res, 6.0, 0.25, 60, _g(0.0), 1 - 1e-12)
        assert cert.total == pytest.approx(0.0, abs=1e-4)

    def test_total_monotone_in_inverse_zeta(self):
        res = self._result()
        totals = [
            clustering_certificate(res, 6.0, z, 60, _g(1.0), 0.1).total
            for z in (0.25, 0.125, 0.0625)
        ]
        assert totals[0] < totals[1] < totals[2]


def _two_block_data(n, hi=1.0, lo=0.0):
    return np.concatenate([np.full(n // 2, hi), np.full(n // 2, lo)])


def _identity_class():
    return FunctionClass(
        (lambda x: np.array([float(x)]),),
        uniform_raw_space(0.0, 1.0),
        box([-10.0], [10.0]),
    )


class TestSelectRanker:
    def test_single_candidate_is_chosen(self):
        from weakstat import ramp_loss

        sel = select_ranker(_identity_class(), _two_block_data(8), ramp_loss(),
                            _g(0.5), 0.1)
        assert sel.chosen_index == 0

    def test_perfect_separation_with_margin(self):
        from weakstat import ramp_loss

        sel = select_ranker(_identity_class(), _two_block_data(12, hi=1.5, lo=0.0),
                            ramp_loss(), _g(0.5), 0.1)
        assert sel.empirical_auc == pytest.approx(1.0)

    def test_certificate_below_empirical_value(self):
        from weakstat import ramp_loss

        sel = select_ranker(_identity_class(), _two_block_data(10), ramp_loss(),
                            _g(2.0, se=0.1), 0.1)
        assert sel.certificate_lower_bound <= sel.empirical_auc

    def test_loss_without_flag_rejected(self):
        bad = LossFunction(lambda t: np.clip(t, 0.0, 1.0), 1.0, below_indicator=False)
        with pytest.raises(InapplicableCertificateError):
            select_ranker(_identity_class(), _two_block_data(8), bad, _g(0.5), 0.1)

    def test_common_shift_leaves_choice_unchanged(self):
        from weakstat import ramp_loss

        space = two_block_ranking_space(2, 1.5)
        cands = linear_ranker_class(2, 8, space)
        data = space.sampler(SeededRng(13).generator(), 40)
        base = select_ranker(cands, data, ramp_loss(), _g(1.0), 0.1)

        shift = 0.35
        shifted_members = tuple(
            (lambda x, h=h: h(x) + shift) for h in cands.members
        )
        shifted = FunctionClass(shifted_members, space, box([-2.0], [2.0]))
        after = select_ranker(shifted, data, ramp_loss(), _g(1.0), 0.1)
        assert after.chosen_index == base.chosen_index


class TestMatchingError:
    def test_permuted_centers_have_zero_error(self):
        assert center_matching_error(TRUE_CENTERS[[2, 0, 1]], TRUE_CENTERS) == 0.0

    def test_known_displacement(self):
        shifted = TRUE_CENTERS + np.array([0.3, 0.4])
        assert center_matching_error(shifted, TRUE_CENTERS) == pytest.approx(0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            center_matching_error(TRUE_CENTERS[:2], TRUE_CENTERS)


class TestGenerators:
    def test_mixture_respects_ball_and_noise_count(self):
        data = gaussian_mixture_with_noise(200, TRUE_CENTERS, 0.3, 0.25, 6.0, SeededRng(14))
        assert data.shape == (200, 2)
        assert np.all(np.linalg.norm(data, axis=1) <= 6.0 + 1e-9)

    def test_two_block_space_orders_populations(self):
        space = two_block_ranking_space(2, 3.0)
        raw = space.sampler(SeededRng(15).generator(), 400)
        pos, neg = raw[:200], raw[200:]
        assert pos[:, 0].mean() > neg[:, 0].mean() + 1.0

    def test_ranker_scores_stay_in_unit_box(self):
        space = two_block_ranking_space(2, 1.5)
        cands = linear_ranker_class(2, 8, space)
        from weakstat import evaluate_class

        raw = space.sampler(SeededRng(16).generator(), 100)
        for cfg in evaluate_class(cands, raw):
            assert np.all(np.abs(cfg.points) <= 1.0)
