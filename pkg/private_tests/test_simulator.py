"""
Monte Carlo tail estimates and Wilson intervals.
"""

import math

import pytest

from astprove.context import workers_scope
from astprove.dist import parse_dist
from astprove.semantics import exact_tail
from astprove.simulator import (
    estimate_process_tail, estimate_tail, estimates_to_frame, exact_nonstop_product,
    nonnegativity_counterexample, stationary_process, wilson_interval,
)


class TestWilson:

    def test_symmetric_around_half(self):
        lo, hi = wilson_interval(50, 100)
        assert lo == pytest.approx(1 - hi)
        assert 0.40 < lo < 0.41

    def test_edges_are_clamped(self):
        assert wilson_interval(0, 100)[0] == 0.0
        assert wilson_interval(100, 100)[1] == 1.0

    def test_wider_at_higher_confidence(self):
        lo95, hi95 = wilson_interval(30, 200, 0.95)
        lo99, hi99 = wilson_interval(30, 200, 0.99)
        assert lo99 < lo95 and hi99 > hi95


class TestEstimateTail:

    def test_reproducible_and_worker_independent(self, symmetric_walk):
        with workers_scope(1):
            serial = estimate_tail(symmetric_walk, (1,), [2, 8, 32], 10_000, seed=5)
        with workers_scope(4):
            parallel = estimate_tail(symmetric_walk, (1,), [2, 8, 32], 10_000, seed=5)
        assert serial == parallel

    def test_agrees_with_exact_tail(self, symmetric_walk):
        ks = [3, 10, 40]
        exact = exact_tail(symmetric_walk, (1,), max(ks))
        for est in estimate_tail(symmetric_walk, (1,), ks, 20_000, seed=2):
            lo, hi = wilson_interval(est.successes, est.trials, 0.999)
            assert lo <= float(exact[est.k - 1]) <= hi

    def test_tail_is_nonincreasing(self, geometric_walk):
        estimates = estimate_tail(geometric_walk, (3,), [1, 2, 4, 8, 16], 5_000, seed=0)
        values = [e.estimate for e in estimates]
        assert values[0] == 1.0
        assert values == sorted(values, reverse=True)

    @pytest.mark.slow
    def test_square_root_plateau(self, symmetric_walk):
        estimates = estimate_tail(symmetric_walk, (1,), [100, 400, 1600], 100_000, seed=0)
        scaled = [e.estimate * math.sqrt(e.k) for e in estimates]
        assert max(scaled) < 1.25 * min(scaled)

    @pytest.mark.slow
    def test_geometric_walk_tail_keeps_falling(self, geometric_walk):
        estimates = estimate_tail(geometric_walk, (1,), [10, 100, 1000, 10_000], 10_000, seed=0)
        values = [e.estimate for e in estimates]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] > 0

    def test_minimum_trials(self, symmetric_walk):
        with pytest.raises(ValueError):
            estimate_tail(symmetric_walk, (1,), [2], 10, seed=0)

    def test_frame_columns(self, symmetric_walk):
        frame = estimates_to_frame(estimate_tail(symmetric_walk, (1,), [2, 4], 500, seed=0))
        assert list(frame.columns) == ["k", "estimate", "wilson95_lo", "wilson95_hi", "trials", "seed"]
        assert list(frame["k"]) == [2, 4]


class TestProcesses:

    def test_stationary_walk_matches_the_loop(self, symmetric_walk):
        spec = stationary_process(1, parse_dist("table{-1:1/2, 1:1/2}"))
        process = estimate_process_tail(spec, [5, 20], 20_000, seed=9)
        exact = exact_tail(symmetric_walk, (1,), 21)
        for est in process:
            lo, hi = wilson_interval(est.successes, est.trials, 0.999)
            assert lo <= float(exact[est.k]) <= hi

    def test_nonstop_product_limit(self):
        assert float(exact_nonstop_product(0)) == 1.0
        assert float(exact_nonstop_product(199)) == pytest.approx(math.exp(-math.pi ** 2 / 6), abs=2e-3)

    @pytest.mark.slow
    def test_counterexample_never_stops_with_positive_probability(self):
        (est,) = estimate_process_tail(nonnegativity_counterexample(), [200], 100_000, seed=1)
        lo, hi = wilson_interval(est.successes, est.trials, 0.99)
        assert lo <= float(exact_nonstop_product(199)) <= hi
        assert est.estimate > 0.17
