"""
astprove/lang/printer.py
========================
Canonical text rendering. ``parse(pretty_print(p)) == p`` for every program.
"""

from __future__ import annotations

from ..dist import describe
from .syntax import (
    And, Assign, Expr, Guard, If, Literal, Not, Or, Poly, Program, Seq, Skip, Stmt,
    Term, While,
)


def _signed(parts: list[tuple[object, str]]) -> str:
    """Join ``(coefficient, factors)`` pairs into ``a + b - c`` form."""
    out = []
    for index, (coeff, factors) in enumerate(parts):
        magnitude = abs(coeff)
        if not factors:
            body = str(magnitude)
        elif magnitude == 1:
            body = factors
        else:
            body = f"{magnitude}*{factors}"
        if index == 0:
            out.append(f"-{body}" if coeff < 0 else body)
        else:
            out.append(f" - {body}" if coeff < 0 else f" + {body}")
    return "".join(out) if out else "0"


def _term_factors(term: Term) -> str:
    factors = [n for n in (term.pvar, term.rvar) if n is not None]
    if term.sqrt_of is not None:
        factors.append(f"isqrt({term.sqrt_of})")
    return "*".join(factors)


def format_expr(expr: Expr) -> str:
    return _signed([(t.coeff, _term_factors(t)) for t in expr.terms])


def format_poly(poly: Poly) -> str:
    return _signed([(c, "*".join(m)) for m, c in poly.terms])


_PRECEDENCE = {Or: 1, And: 2, Not: 3, Literal: 4}


def format_guard(guard: Guard) -> str:
    if isinstance(guard, Literal):
        return f"{format_poly(guard.lhs)} {guard.op} {format_poly(guard.rhs)}"
    if isinstance(guard, Not):
        inner = format_guard(guard.operand)
        if isinstance(guard.operand, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"
    word = "and" if isinstance(guard, And) else "or"
    level = _PRECEDENCE[type(guard)]
    left = format_guard(guard.left)
    right = format_guard(guard.right)
    if _PRECEDENCE[type(guard.left)] < level:
        left = f"({left})"
    if _PRECEDENCE[type(guard.right)] <= level:
        right = f"({right})"
    return f"{left} {word} {right}"


def format_stmt(stmt: Stmt) -> str:
    if isinstance(stmt, Skip):
        return "skip"
    if isinstance(stmt, Assign):
        return f"{stmt.target} := {format_expr(stmt.expr)}"
    if isinstance(stmt, Seq):
        first = format_stmt(stmt.first)
        if isinstance(stmt.first, Seq):
            first = f"({first})"
        return f"{first}; {format_stmt(stmt.second)}"
    if isinstance(stmt, If):
        return (f"if {format_guard(stmt.guard)} then {format_stmt(stmt.then)} "
                f"else {format_stmt(stmt.orelse)} fi")
    if isinstance(stmt, While):
        return f"while {format_guard(stmt.guard)} do {format_stmt(stmt.body)} od"
    raise TypeError(f"not a statement: {stmt!r}")


def pretty_print(program: Program) -> str:
    lines = []
    if program.pvars:
        lines.append(f"pvar {', '.join(program.pvars)};")
    for decl in program.rvars:
        lines.append(f"rvar {decl.name} ~ {describe(decl.dist)};")
    lines.append(format_stmt(program.body))
    return "\n".join(lines) + "\n"
