"""
Kernel, path runner and the exact tail oracle.
"""

import math
from fractions import Fraction

import pytest

from astprove.errors import InfiniteSupport, StateExplosion
from astprove.semantics import (
    Configuration, Location, approximate_tail, exact_tail, kernel_row, run, step,
)


def _stay_positive(n):
    """P(a symmetric walk from 1 stays >= 1 for n steps)."""
    return Fraction(math.comb(n, n // 2), 2 ** n)


class TestKernel:

    def test_rows_are_distributions(self, symmetric_walk):
        row = kernel_row(symmetric_walk, Configuration(Location.IN, (3,)))
        assert row.total == 1
        assert {cfg.valuation for cfg, _ in row.successors} == {(2,), (4,)}

    def test_exit_and_absorption(self, symmetric_walk):
        leaving = step(symmetric_walk, Configuration(Location.IN, (0,)), ())
        assert leaving == Configuration(Location.OUT, (0,))
        assert step(symmetric_walk, leaving, (1,)) == leaving
        assert kernel_row(symmetric_walk, leaving).successors == ((leaving, Fraction(1)),)


class TestRun:

    def test_countdown_terminates_after_the_guard_fails(self, countdown):
        result = run(countdown, (3,), seed=0, horizon=100)
        assert (result.terminated, result.steps, result.valuation) == (True, 4, (0,))

    def test_horizon_cuts_the_path(self, countdown):
        result = run(countdown, (50,), seed=0, horizon=10)
        assert not result.terminated and result.steps == 10

    def test_seeded(self, symmetric_walk):
        assert run(symmetric_walk, (5,), 11, 500) == run(symmetric_walk, (5,), 11, 500)


class TestExactTail:

    def test_first_values(self, symmetric_walk):
        assert exact_tail(symmetric_walk, (1,), 3) == [1, 1, Fraction(1, 2)]

    def test_central_binomial_law(self, symmetric_walk):
        tails = exact_tail(symmetric_walk, (1,), 40)
        for k in range(2, 41):
            assert tails[k - 1] == _stay_positive(k - 2)

    def test_countdown(self, countdown):
        assert exact_tail(countdown, (3,), 6) == [1, 1, 1, 1, 0, 0]

    def test_infinite_support(self, geometric_walk):
        with pytest.raises(InfiniteSupport):
            exact_tail(geometric_walk, (1,), 5)

    def test_state_cap(self, symmetric_walk):
        with pytest.raises(StateExplosion) as info:
            exact_tail(symmetric_walk, (1,), 100, cap=10)
        assert info.value.cap == 10


class TestApproximateTail:

    def test_contains_exact_values(self, symmetric_walk):
        exact = exact_tail(symmetric_walk, (1,), 60)
        approx = approximate_tail(symmetric_walk, (1,), 60, prune_below=Fraction(1, 2 ** 20))
        for value, interval in zip(exact, approx):
            assert interval.contains(value)

    def test_no_pruning_is_exact(self, symmetric_walk):
        exact = exact_tail(symmetric_walk, (2,), 30)
        approx = approximate_tail(symmetric_walk, (2,), 30, prune_below=Fraction(0))
        assert [i.lo for i in approx] == exact
        assert all(i.width == 0 for i in approx)
