import numpy as np
import pytest

from weakstat import (
    Configuration,
    DomainViolationError,
    FunctionClass,
    SeededRng,
    box,
    evaluate_class,
    empirical_seminorms,
    linear_class,
    mean_statistic,
    uniform_raw_space,
    unit_interval,
)
from weakstat.core import parallel_map, worker_count


class TestDomain:
    def test_diameter_is_euclidean_norm_of_widths(self):
        dom = box([0.0, -1.0], [2.0, 1.0])
        assert dom.diameter == pytest.approx(np.sqrt(4.0 + 4.0))

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            box([1.0], [0.0])

    def test_rejects_infinite_bounds(self):
        with pytest.raises(ValueError):
            box([0.0], [np.inf])

    def test_uniform_draws_stay_inside(self):
        dom = box([-2.0, 0.0], [-1.0, 3.0])
        pts = dom.uniform(SeededRng(5).generator(), 100)
        assert dom.contains(pts)


class TestConfiguration:
    def test_scalar_sequence_becomes_column(self):
        cfg = Configuration([0.1, 0.2, 0.3])
        assert cfg.points.shape == (3, 1)
        assert cfg.n == 3 and cfg.d == 1

    def test_in_domain_rejects_outside_rows(self):
        with pytest.raises(DomainViolationError):
            Configuration.in_domain(np.array([[0.5], [1.5]]), unit_interval())

    def test_points_are_immutable(self):
        cfg = Configuration([0.1, 0.2])
        with pytest.raises(ValueError):
            cfg.points[0] = 9.0


class TestEvaluateClass:
    def test_identity_member(self):
        fc = FunctionClass(
            (lambda x: np.array([x]),), uniform_raw_space(), unit_interval()
        )
        (cfg,) = evaluate_class(fc, [0.2, 0.7])
        assert cfg.points[:, 0].tolist() == [0.2, 0.7]

    def test_identity_and_constant_members(self):
        fc = FunctionClass(
            (lambda x: np.array([x]), lambda x: np.array([0.0])),
            uniform_raw_space(),
            unit_interval(),
        )
        a, b = evaluate_class(fc, [0.5])
        assert a.points[0, 0] == 0.5
        assert b.points[0, 0] == 0.0

    def test_linear_member_on_vector_datum(self):
        w = np.array([1.0, 1.0])
        fc = FunctionClass(
            (lambda x: np.array([float(w @ x)]),), uniform_raw_space(), unit_interval()
        )
        (cfg,) = evaluate_class(fc, [np.array([0.3, 0.4])])
        assert cfg.points[0, 0] == pytest.approx(0.7)

    def test_violation_names_member_and_coordinate(self):
        fc = FunctionClass(
            (lambda x: np.array([x]), lambda x: np.array([2.0])),
            uniform_raw_space(),
            unit_interval(),
        )
        with pytest.raises(DomainViolationError, match=r"member 1 .* coordinate 0"):
            evaluate_class(fc, [0.5])

    def test_clipped_linear_classes_stay_inside(self):
        # domain closure: members that clip into the box can never trip the check
        dom = unit_interval()
        gen = SeededRng(17).generator()
        for _ in range(20):
            w = float(gen.uniform(-3, 3))
            fc = FunctionClass(
                (lambda x, w=w: np.clip(np.array([w * x]), dom.lower, dom.upper),),
                uniform_raw_space(-1.0, 1.0),
                dom,
            )
            raw = fc.raw_space.sampler(gen, 50)
            (cfg,) = evaluate_class(fc, raw)
            assert dom.contains(cfg.points)


class TestSeededRng:
    def test_same_pair_same_draws(self):
        a = SeededRng(42, 7).generator().standard_normal(5)
        b = SeededRng(42, 7).generator().standard_normal(5)
        assert a.tolist() == b.tolist()

    def test_distinct_streams_differ(self):
        a = SeededRng(42, 0).generator().standard_normal(5)
        b = SeededRng(42, 1).generator().standard_normal(5)
        assert not np.allclose(a, b)

    def test_split_is_deterministic_and_distinct(self):
        r = SeededRng(3)
        assert r.split(5) == SeededRng(3).split(5)
        assert r.split(5) != r.split(6)
        assert r.split(5).seed == r.seed

    def test_pipeline_is_bit_identical_across_runs(self):
        f = mean_statistic(6)
        a = empirical_seminorms(f, 2000, SeededRng(9))
        b = empirical_seminorms(f, 2000, SeededRng(9))
        assert (a.m_lip, a.j_lip, a.m_plain, a.j_plain) == (b.m_lip, b.j_lip, b.m_plain, b.j_plain)


class TestWorkers:
    def test_worker_count_reads_env(self, monkeypatch):
        monkeypatch.setenv("WEAKSTAT_THREADS", "4")
        assert worker_count() == 4
        monkeypatch.setenv("WEAKSTAT_THREADS", "bogus")
        assert worker_count() == 1

    def test_parallel_map_matches_serial(self, monkeypatch):
        items = list(range(20))
        serial = parallel_map(lambda i: i * i, items)
        monkeypatch.setenv("WEAKSTAT_THREADS", "4")
        threaded = parallel_map(lambda i: i * i, items)
        assert serial == threaded

    def test_search_results_independent_of_thread_count(self, monkeypatch):
        f = mean_statistic(5)
        one = empirical_seminorms(f, 4000, SeededRng(2))
        monkeypatch.setenv("WEAKSTAT_THREADS", "3")
        many = empirical_seminorms(f, 4000, SeededRng(2))
        assert one.m_lip == many.m_lip and one.j_lip == many.j_lip


def test_linear_class_builds_ordered_members():
    fc = linear_class([0.5, 1.0], uniform_raw_space(), unit_interval())
    a, b = evaluate_class(fc, [0.8])
    assert a.points[0, 0] == pytest.approx(0.4)
    assert b.points[0, 0] == pytest.approx(0.8)
