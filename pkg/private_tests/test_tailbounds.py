"""
Explicit tail bounds and their relation to the exact tail.
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from astprove.context import precision_scope
from astprove.errors import TViolatesSmallness
from astprove.semantics import exact_tail
from astprove.simulator import estimate_tail
from astprove.tailbounds import (
    BoundInput, BoundKind, bound_diff, bound_general, bound_series, general_constants, round_up,
    series_to_frame, smallness_gap, t_max,
)

UNIT = BoundInput(Fraction(2), Fraction(1), Fraction(1), BoundKind.DIFF_BOUNDED)
GENERAL = BoundInput(Fraction(2), Fraction(1), None, BoundKind.GENERAL)


class TestInputs:

    @pytest.mark.parametrize("kwargs", [
        dict(e_x0=0, delta=1, c_diff=1),
        dict(e_x0=1, delta=-1, c_diff=1),
        dict(e_x0=1, delta=1, c_diff=0),
        dict(e_x0=1, delta=1, c_diff=None, kind=BoundKind.DIFF_BOUNDED),
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(ValueError):
            BoundInput(**kwargs)


class TestDifferenceBounded:

    def test_reference_value(self):
        result = bound_diff(UNIT, 100)
        assert result.bound == pytest.approx(0.820384, abs=1e-3)
        assert result.t == pytest.approx(0.1)
        assert result.valid

    def test_t_max_for_unit_constants(self):
        with precision_scope():
            limit = t_max(1, 1)
            assert 1.09 < float(limit) < 1.12
            assert smallness_gap(limit, 1, 1) <= 0
            assert smallness_gap(limit * (1 + mpf(10) ** -6), 1, 1) > 0

    def test_t_is_capped_at_t_max(self):
        assert bound_diff(UNIT, 1).t == 1.0
        steep = BoundInput(Fraction(2), Fraction(1), Fraction(4))
        with precision_scope():
            limit = float(t_max(1, 4))
        assert limit < 0.1
        assert bound_diff(steep, 1).t == pytest.approx(limit, rel=1e-9)
        assert bound_diff(steep, 10 ** 6).t == pytest.approx(1e-3)

    def test_explicit_t_must_be_small(self):
        with pytest.raises(TViolatesSmallness):
            bound_diff(UNIT, 10, t=2)
        assert bound_diff(UNIT, 10, t=Fraction(1, 2)).valid

    def test_vanishing_start_value(self):
        tiny = BoundInput(Fraction(1, 10 ** 9), Fraction(1), Fraction(1))
        assert bound_diff(tiny, 100).bound < 1e-6

    def test_square_root_decay(self):
        limit = 2 / (1 - math.exp(-0.25))
        assert bound_diff(UNIT, 10 ** 6).bound * 1000 == pytest.approx(limit, rel=1e-2)

    def test_plateau_ratios(self):
        ratio = bound_diff(UNIT, 4 * 10 ** 6).bound / bound_diff(UNIT, 10 ** 6).bound
        assert ratio == pytest.approx(0.5, rel=1e-2)

    def test_scaled_bound_settles(self):
        early = bound_diff(UNIT, 10 ** 4).bound * 10 ** 2
        late = bound_diff(UNIT, 10 ** 6).bound * 10 ** 3
        assert abs(late - early) < 0.1 * late

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(1, 10 ** 7), min_size=2, max_size=8, unique=True))
    def test_series_is_nonincreasing(self, ks):
        results = bound_series(UNIT, sorted(ks))
        bounds = [r.bound for r in results]
        assert bounds == sorted(bounds, reverse=True)
        assert all(0 < b <= 1 for b in bounds)

    def test_bounds_dominate_the_exact_tail(self, symmetric_walk):
        # h = x + 1 certifies the walk with delta = zeta = 1; from x = 1, E = 2
        exact = exact_tail(symmetric_walk, (1,), 64)
        for result in bound_series(UNIT, range(1, 65)):
            assert result.bound >= float(exact[result.k - 1])

    @pytest.mark.slow
    def test_bounds_dominate_the_simulated_tail(self, symmetric_walk):
        for est in estimate_tail(symmetric_walk, (1,), [100, 1000], 100_000, seed=0):
            assert bound_diff(UNIT, est.k).bound >= est.wilson95[0]


class TestGeneral:

    def test_constants(self):
        constants = general_constants(GENERAL)
        assert 0.33 < constants.c < 0.35
        assert constants.C == pytest.approx(6 / (1 - math.exp(-1 / 16)), rel=1e-9)
        assert constants.N == 1

    def test_invalid_below_threshold(self):
        early = bound_general(GENERAL, 500)
        assert not early.valid and early.bound == 1.0
        late = bound_general(GENERAL, 600)
        assert late.valid and late.bound <= 1.0

    def test_sixth_root_decay(self):
        results = bound_series(GENERAL, [10 ** 6, 10 ** 9, 10 ** 12])
        assert all(r.valid for r in results)
        bounds = [r.bound for r in results]
        assert bounds == sorted(bounds, reverse=True)
        assert bounds[-1] < 0.05

    def test_sixth_root_scaling(self):
        ks = [10 ** 6, 10 ** 8, 10 ** 9, 10 ** 10, 10 ** 12]
        scaled = [r.bound * r.k ** (1 / 6) for r in bound_series(GENERAL, ks)]
        assert scaled == sorted(scaled, reverse=True)
        assert scaled[0] < 10
        assert abs(scaled[2] - scaled[-1]) < 0.1 * scaled[-1]

    def test_frame(self):
        frame = series_to_frame(bound_series(GENERAL, [100, 10 ** 6]))
        assert list(frame.columns) == ["k", "bound", "method", "t", "valid"]
        assert list(frame["valid"]) == [False, True]


class TestRounding:

    def test_rounds_up_to_fifteen_digits(self):
        with mp.workdps(40):
            value = mpf("0.1234567890123456789")
            out = round_up(value)
        assert out >= 0.123456789012345
        assert Fraction(out) >= Fraction("0.1234567890123456789")

    def test_capped_at_one(self):
        with mp.workdps(30):
            assert round_up(mpf(3)) == 1.0

    def test_precision_does_not_change_reported_values(self):
        with precision_scope(20):
            low = bound_diff(UNIT, 1000).bound
        with precision_scope(60):
            high = bound_diff(UNIT, 1000).bound
        assert low == pytest.approx(high, rel=1e-12)
