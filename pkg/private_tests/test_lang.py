"""
Front end: parsing, printing, normalization and the compiled update.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from astprove import catalog
from astprove.errors import LoopInsideBranch, NestedLoop, ParseError, UndeclaredVariable
from astprove.lang import (
    LoopFreeBlock, Poly, SingleWhileLoop, Term, While, compile_body, guard_to_dnf, incremental_matrix,
    load_loop, normalize, parse, parse_expr, parse_guard, pretty_print,
)


class TestParse:

    def test_header_and_body(self):
        program = parse(catalog.source("symmetric_walk"))
        assert program.pvars == ("x",)
        assert program.rvar_names == ("r",)
        assert isinstance(program.body, While)

    def test_undeclared_variable_is_located(self):
        text = "pvar x;\nwhile x >= 1 do\n  z := x\nod\n"
        with pytest.raises(UndeclaredVariable) as info:
            parse(text, path="walk.pwhile")
        assert info.value.name == "z"
        assert (info.value.line, info.value.col) == (3, 3)
        assert str(info.value).startswith("walk.pwhile:3:3:")

    def test_sampling_variable_in_guard(self):
        text = "pvar x;\nrvar r ~ point(1);\nwhile r >= 1 do x := x + r od\n"
        with pytest.raises(ParseError, match="may not appear in a guard"):
            parse(text)

    def test_cubic_guard_rejected(self):
        with pytest.raises(ParseError, match="degree at most 2"):
            parse("pvar x;\nwhile x*x*x >= 1 do skip od\n")

    def test_duplicate_declaration(self):
        with pytest.raises(ParseError, match="declared twice"):
            parse("pvar x, x;\nskip\n")

    def test_bad_distribution_points_at_declaration(self):
        with pytest.raises(ParseError) as info:
            parse("pvar x;\nrvar r ~ table{0:1/3};\nskip\n")
        assert info.value.line == 2

    def test_product_of_two_program_variables_in_update(self):
        with pytest.raises(ParseError, match="term must have the shape"):
            parse("pvar x, y;\nx := x*y\n")

    def test_rational_certificate_expression(self):
        expr = parse_expr("-x + y + 1/4", ("x", "y"), rational=True)
        assert expr.terms == (Term(-1, pvar="x"), Term(1, pvar="y"), Term(Fraction(1, 4)))

    def test_strict_comparisons_become_integer_bounds(self):
        assert parse_guard("x > 0", ("x",)) == parse_guard("x >= 1", ("x",))
        assert parse_guard("x < 3", ("x",)) == parse_guard("x <= 2", ("x",))


# ─────────────────────────────────────────────────────────────
# Printing
# ─────────────────────────────────────────────────────────────

_VARS = ("x", "y")
_FACTORS = ("x", "y", "r", "s", "r*isqrt(x)", "")


@st.composite
def expressions(draw):
    parts = []
    for index in range(draw(st.integers(1, 3))):
        coeff = draw(st.integers(-4, 4).filter(lambda c: c != 0))
        factor = draw(st.sampled_from(_FACTORS))
        body = f"{abs(coeff)}*{factor}" if factor else str(abs(coeff))
        if index == 0:
            parts.append(f"-{body}" if coeff < 0 else body)
        else:
            parts.append(f" - {body}" if coeff < 0 else f" + {body}")
    return "".join(parts)


@st.composite
def guards(draw, depth=2):
    coeff = draw(st.integers(-3, 3).filter(lambda c: c != 0))
    var = draw(st.sampled_from(_VARS))
    bound = draw(st.integers(-5, 5))
    op = draw(st.sampled_from([">=", "<=", ">", "<", "==", "!="]))
    literal = f"{coeff}*{var} {op} {bound}"
    if depth == 0 or draw(st.booleans()):
        return literal
    other = draw(guards(depth=depth - 1))
    shape = draw(st.sampled_from(["and", "or", "not", "not-or"]))
    if shape == "not":
        return f"not ({other})"
    if shape == "not-or":
        return f"not (({literal}) or ({other}))"
    return f"({literal}) {shape} ({other})"


@st.composite
def statements(draw, depth=2):
    stmts = []
    for _ in range(draw(st.integers(1, 3))):
        target = draw(st.sampled_from(_VARS))
        roll = draw(st.integers(0, 4))
        if roll == 0 and depth > 0:
            then = draw(statements(depth=depth - 1))
            orelse = draw(st.one_of(st.just("skip"), statements(depth=depth - 1)))
            stmts.append(f"if {draw(guards())} then {then} else {orelse} fi")
        elif roll == 1:
            stmts.append(f"if {draw(guards())} then {target} := {draw(expressions())} else skip fi")
        else:
            stmts.append(f"{target} := {draw(expressions())}")
    return "; ".join(stmts)


@st.composite
def programs(draw):
    header = "pvar x, y;\nrvar r ~ table{-1:1/2, 1:1/2};\nrvar s ~ point(2);\n"
    prefix = draw(statements())
    return f"{header}{prefix};\nwhile {draw(guards())} do {draw(statements())} od\n"


class TestPrinter:

    @settings(max_examples=1000, deadline=None)
    @given(programs())
    def test_parse_print_parse(self, text):
        program = parse(text)
        printed = pretty_print(program)
        assert parse(printed) == program
        assert pretty_print(parse(printed)) == printed

    def test_catalog_programs_round_trip(self):
        for name in catalog.names():
            program = catalog.load(name)
            assert parse(pretty_print(program)) == program


# ─────────────────────────────────────────────────────────────
# Normal form
# ─────────────────────────────────────────────────────────────

class TestIncremental:

    def _matrix(self, body):
        program = parse(f"pvar x, y;\nrvar r ~ point(1);\nrvar s ~ point(1);\n{body}\n")
        return incremental_matrix(program.body, program.pvars, program.rvar_names)

    def test_matrix_layout(self):
        assert self._matrix("x := x + r; y := y - 2*s") == ((1, 0), (0, -2))

    def test_shared_sampling_variable_is_not_incremental(self):
        assert self._matrix("x := x + r; y := y + r") is None

    def test_scaled_or_rooted_updates_are_not_incremental(self):
        assert self._matrix("x := 2*x + r") is None
        assert self._matrix("x := x + r*isqrt(x)") is None
        assert self._matrix("x := x + r; x := x + s") is None

    def test_skip_body_is_identity(self):
        program = parse("pvar x, y;\nrvar r ~ point(1);\nrvar s ~ point(1);\nskip\n")
        update, matrix = compile_body(program.body, program.pvars, program.rvar_names)
        assert matrix == ((0, 0), (0, 0))
        assert update((3, -4), (1, 1)) == (3, -4)

    @settings(max_examples=100, deadline=None)
    @given(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
    def test_update_matches_matrix(self, pv, rv):
        program = parse("pvar x, y;\nrvar r ~ point(1);\nrvar s ~ point(1);\nx := x + r; y := y - 2*s\n")
        update, matrix = compile_body(program.body, program.pvars, program.rvar_names)
        moved = tuple(p + sum(a * r for a, r in zip(row, rv)) for p, row in zip(pv, matrix))
        assert update(pv, rv) == moved

    def test_loop_flags(self, symmetric_walk, isqrt_walk, parabola_walk):
        assert symmetric_walk.is_incremental and symmetric_walk.guard_is_affine
        assert not isqrt_walk.is_incremental
        assert parabola_walk.is_incremental and not parabola_walk.guard_is_affine


class TestNormalize:

    def test_components_of_two_phase(self):
        norm = normalize(catalog.load("two_phase"))
        kinds = [type(c) for c in norm.components]
        assert kinds == [LoopFreeBlock, SingleWhileLoop, SingleWhileLoop]
        assert [loop.loop_id for loop in norm.loops] == [0, 1]
        assert norm.components[0].execute((1, 0), ("x", "y")) == (1, 3)
        assert not norm.components[0].uses_sampling()

    def test_nested_loop_rejected(self):
        text = "pvar x, y;\nwhile x >= 1 do\n  while y >= 1 do y := y - 1 od\nod\n"
        with pytest.raises(NestedLoop) as info:
            normalize(parse(text))
        assert info.value.line == 3

    def test_loop_inside_branch_rejected(self):
        text = "pvar x;\nif x >= 1 then while x >= 1 do x := x - 1 od else skip fi\n"
        with pytest.raises(LoopInsideBranch):
            normalize(parse(text))

    def test_guard_dnf_tightens_integer_literals(self):
        dnf = guard_to_dnf(parse_guard("2*x >= 3", ("x",)))
        assert dnf == ((Poly.from_dict({("x",): 1, (): -2}),),)

    def test_guard_dnf_shapes(self):
        assert len(guard_to_dnf(parse_guard("x >= 1 or y >= 1", ("x", "y")))) == 2
        assert guard_to_dnf(parse_guard("x >= 1 and 0 >= 1", ("x",))) == ()
        negated = guard_to_dnf(parse_guard("not (x >= 1 and y >= 1)", ("x", "y")))
        assert len(negated) == 2

    def test_isqrt_update_is_floor(self, isqrt_walk):
        assert isqrt_walk.update((10,), (-1,)) == (7,)
        assert isqrt_walk.update((16,), (1,)) == (20,)

    def test_batch_backend_matches_scalar(self):
        loop = load_loop(
            "pvar x, y;\nrvar r ~ table{-1:1/2, 1:1/2};\n"
            "while x >= 1 or y >= 2 do if x >= y then x := x + r*isqrt(x) else y := y - 1 fi od\n"
        )
        xs = np.arange(-3, 30, dtype=np.int64)
        ys = (xs * 7) % 11 - 2
        rs = np.where(xs % 2 == 0, -1, 1).astype(np.int64)
        held = loop.holds_batch([xs, ys])
        out_x, out_y = loop.update_batch([xs, ys], [rs])
        for i in range(len(xs)):
            pv = (int(xs[i]), int(ys[i]))
            assert bool(held[i]) == loop.holds(pv)
            assert (int(out_x[i]), int(out_y[i])) == loop.update(pv, (int(rs[i]),))
