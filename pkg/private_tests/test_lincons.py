"""
Exact simplex and the Farkas encoding.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from astprove.errors import EmptyPremise, Unbounded
from astprove.lincons import (
    AffineTemplate, Feasible, Infeasible, LinExpr, LinSystem, Polyhedron, farkas_encode, maximize,
    minimize, solve,
)


def _system(names, lower=None):
    system = LinSystem()
    exprs = [system.add_variable(n, lower) for n in names]
    return system, exprs


class TestSolve:

    def test_textbook_maximum(self):
        system, (x, y) = _system(["x", "y"], lower=0)
        system.add(x + y * 2, "<=", 4)
        system.add(x * 3 + y, "<=", 6)
        result = maximize(system, x + y)
        assert isinstance(result, Feasible)
        assert (result["x"], result["y"]) == (Fraction(8, 5), Fraction(6, 5))
        assert result.objective == Fraction(14, 5)

    def test_free_variables(self):
        system, (x,) = _system(["x"])
        system.add(x, ">=", -3)
        assert minimize(system, x).objective == -3

    def test_equalities(self):
        system, (x, y) = _system(["x", "y"])
        system.add(x + y, "=", 5)
        system.add(x - y, "=", 1)
        result = solve(system)
        assert (result["x"], result["y"]) == (3, 2)

    def test_infeasible(self):
        system, (x,) = _system(["x"])
        system.add(x, ">=", 1)
        system.add(x, "<=", 0)
        assert isinstance(solve(system), Infeasible)

    def test_unbounded(self):
        system, (x,) = _system(["x"], lower=0)
        with pytest.raises(Unbounded):
            maximize(system, x)

    def test_undeclared_variable(self):
        system, (x,) = _system(["x"])
        with pytest.raises(ValueError):
            system.add(x + LinExpr.var("z"), ">=", 0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(-4, 4), st.integers(-4, 4), st.sampled_from(["<=", ">="]),
                      st.integers(-6, 6)),
            min_size=1, max_size=6,
        ),
        st.randoms(use_true_random=False),
    )
    def test_constraint_order_does_not_matter(self, rows, rnd):
        def build(order):
            system, (x, y) = _system(["x", "y"])
            system.add(x, "<=", 10)
            system.add(x, ">=", -10)
            system.add(y, "<=", 10)
            system.add(y, ">=", -10)
            for a, b, sense, rhs in order:
                system.add(x * a + y * b, sense, rhs)
            return system

        shuffled = list(rows)
        rnd.shuffle(shuffled)
        first = minimize(build(rows), LinExpr({"x": 1, "y": 2}))
        second = minimize(build(shuffled), LinExpr({"x": 1, "y": 2}))
        assert type(first) is type(second)
        if isinstance(first, Feasible):
            assert first.objective == second.objective


class TestFarkas:

    def _template(self):
        return AffineTemplate({"x": LinExpr.var("a"), "y": LinExpr.var("b")}, LinExpr.var("c") - 1)

    def test_smallest_offset(self):
        premise = Polyhedron.from_rows(("x",), [({"x": 1}, -1)])
        conclusion = AffineTemplate({"x": LinExpr.var("a")}, LinExpr.var("c") - 1)
        system, (a, c) = _system(["a", "c"])
        system.extend(farkas_encode(premise, conclusion))
        system.add(a, "=", 1)
        assert minimize(system, c).objective == 0

    def test_wrong_direction_is_infeasible(self):
        premise = Polyhedron.from_rows(("x",), [({"x": 1}, -1)])
        conclusion = AffineTemplate({"x": LinExpr.var("a")}, LinExpr.var("c"))
        system, (a, c) = _system(["a", "c"])
        system.extend(farkas_encode(premise, conclusion))
        system.add(a, "<=", -1)
        assert isinstance(solve(system), Infeasible)

    def test_empty_premise(self):
        premise = Polyhedron.from_rows(("x",), [({"x": 1}, -1), ({"x": -1}, 0)])
        assert premise.is_empty()
        with pytest.raises(EmptyPremise):
            farkas_encode(premise, self._template())

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-5, 5)),
                 min_size=1, max_size=4),
        st.integers(-3, 3), st.integers(-3, 3),
    )
    def test_solutions_are_sound_on_the_premise(self, rows, a, b):
        box = [({"x": 1}, 6), ({"x": -1}, 6), ({"y": 1}, 6), ({"y": -1}, 6)]
        premise = Polyhedron.from_rows(("x", "y"), box + [({"x": p, "y": q}, r) for p, q, r in rows])
        if premise.is_empty():
            return
        system, (ea, eb, ec) = _system(["a", "b", "c"])
        system.extend(farkas_encode(premise, self._template()))
        system.add(ea, "=", a)
        system.add(eb, "=", b)
        result = minimize(system, ec)
        assert isinstance(result, Feasible)
        conclusion = self._template().instantiate(result.assignment)
        for x in range(-6, 7):
            for y in range(-6, 7):
                point = {"x": x, "y": y}
                if premise.contains(point):
                    assert conclusion.value(point) >= 0

    def test_fragment_merges_into_larger_system(self):
        premise = Polyhedron.from_rows(("x", "y"), [({"x": 1}, 0), ({"y": 1}, 0)])
        system, (a, b, c) = _system(["a", "b", "c"])
        system.extend(farkas_encode(premise, self._template(), prefix="p"))
        system.add(a, ">=", 1)
        system.add(b, ">=", 2)
        result = minimize(system, a + b + c)
        assert (result["a"], result["b"], result["c"]) == (1, 2, 1)
