"""
Distributions, exact moments, certified expectations and sampling.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from astprove.dist import (
    FiniteSupport, Interval, PointMass, SamplingFunction, TwoSidedGeometric, describe, expect,
    joint_support, make_rng, mean_abs, moments, parse_dist, sample_batch, support,
)
from astprove.errors import GrowthUnbounded, InfiniteSupport, ParseError

HALF = Fraction(1, 2)


class TestMoments:

    def test_two_point(self):
        m = moments(parse_dist("table{-1:1/2, 1:1/2}"))
        assert (m.mean, m.variance) == (0, 1)

    def test_uniform(self):
        m = moments(parse_dist("uniform(0..2)"))
        assert (m.mean, m.variance) == (1, Fraction(2, 3))

    def test_point_mass(self):
        m = moments(PointMass(-3))
        assert (m.mean, m.variance) == (-3, 0)

    def test_two_sided_geometric(self):
        dist = TwoSidedGeometric(HALF)
        assert moments(dist).mean == 0
        assert moments(dist).variance == 6
        assert mean_abs(dist) == 2
        assert dist.prob(0) == 0
        assert dist.prob(1) == dist.prob(-1) == Fraction(1, 4)
        assert sum(dist.prob(k) for k in range(-40, 41)) == 1 - dist.tail_mass(40)

    def test_support_of_infinite_law(self):
        with pytest.raises(InfiniteSupport):
            support(TwoSidedGeometric(HALF))


class TestJointSupport:

    def test_product_probabilities(self):
        sampling = SamplingFunction.from_pairs([
            ("r", parse_dist("table{0:1/2, 2:1/2}")),
            ("s", parse_dist("table{-1:1/4, 1:3/4}")),
        ])
        entries = dict(joint_support(sampling))
        assert len(entries) == 4
        assert entries[(2, 1)] == Fraction(3, 8)
        assert sum(entries.values()) == 1


class TestExpect:

    def test_finite_support_is_exact(self):
        sampling = SamplingFunction.from_pairs([("r", parse_dist("uniform(-2..2)"))])
        assert expect(sampling, lambda rv: rv[0] ** 2) == Interval.point(2)

    def test_geometric_interval_is_tight(self):
        sampling = SamplingFunction.from_pairs([("r", TwoSidedGeometric(HALF))])
        mean = expect(sampling, lambda rv: rv[0], growth=1)
        assert mean.contains(0)
        assert mean.width <= Fraction(2, 10 ** 9)
        spread = expect(sampling, lambda rv: abs(rv[0]), growth=1)
        assert spread.contains(2)

    def test_infinite_support_needs_growth(self):
        sampling = SamplingFunction.from_pairs([("r", TwoSidedGeometric(HALF))])
        with pytest.raises(GrowthUnbounded):
            expect(sampling, lambda rv: rv[0])


class TestText:

    @pytest.mark.parametrize("text, expected", [
        ("uniform(1..3)", "table{1:1/3, 2:1/3, 3:1/3}"),
        ("point(-4)", "point(-4)"),
        ("two_sided_geometric(1/3)", "two_sided_geometric(1/3)"),
        ("table{ 1 : 3/4 , -1 : 1/4 }", "table{-1:1/4, 1:3/4}"),
    ])
    def test_canonical_form(self, text, expected):
        assert describe(parse_dist(text)) == expected

    @pytest.mark.parametrize("text", [
        "table{0:1/2}", "table{0:1/2, 0:1/2}", "uniform(3..1)", "two_sided_geometric(1)",
        "binomial(3, 1/2)", "table{0:0, 1:1}",
    ])
    def test_rejected(self, text):
        with pytest.raises(ParseError):
            parse_dist(text)

    @settings(max_examples=100, deadline=None)
    @given(st.dictionaries(st.integers(-20, 20), st.integers(1, 9), min_size=1, max_size=6))
    def test_tables_survive_describe(self, weights):
        total = sum(weights.values())
        dist = FiniteSupport(tuple((v, Fraction(w, total)) for v, w in weights.items()))
        assert parse_dist(describe(dist)) == dist


class TestSampling:

    def test_same_stream_same_draws(self):
        dist = parse_dist("table{-1:1/4, 1:3/4}")
        a = sample_batch(dist, make_rng(7, 0), 1000)
        b = sample_batch(dist, make_rng(7, 0), 1000)
        c = sample_batch(dist, make_rng(7, 1), 1000)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_frequencies(self):
        dist = parse_dist("table{-1:1/4, 1:3/4}")
        draws = sample_batch(dist, make_rng(1), 200_000)
        assert set(np.unique(draws)) == {-1, 1}
        assert abs(draws.mean() - 0.5) < 0.01

    def test_geometric_draws_are_nonzero_and_symmetric(self):
        draws = sample_batch(TwoSidedGeometric(HALF), make_rng(3), 200_000)
        assert np.count_nonzero(draws == 0) == 0
        assert abs(draws.mean()) < 0.05
        assert abs(np.abs(draws).mean() - 2) < 0.05
