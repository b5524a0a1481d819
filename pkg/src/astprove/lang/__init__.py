"""Front end for probabilistic while-programs: syntax, parsing, printing, normal form."""

from .compiler import compile_body, compile_update, incremental_matrix, isqrt_floor
from .normal_form import (
    LoopFreeBlock, NormalizedProgram, SingleWhileLoop, guard_to_dnf, normalize,
)
from .parser import parse, parse_expr, parse_guard
from .printer import format_expr, format_guard, format_stmt, pretty_print
from .syntax import (
    And, Assign, Expr, If, Literal, Loc, Not, Or, Poly, Program, RvarDecl, Seq, Skip,
    Term, While,
)


def load_loop(text: str, index: int = 0) -> SingleWhileLoop:
    """Parse, normalize and return the ``index``-th loop of ``text``."""
    return normalize(parse(text)).loops[index]


__all__ = [
    "And", "Assign", "Expr", "If", "Literal", "Loc", "LoopFreeBlock", "Not",
    "NormalizedProgram", "Or", "Poly", "Program", "RvarDecl", "Seq", "SingleWhileLoop",
    "Skip", "Term", "While", "compile_body", "compile_update", "format_expr", "format_guard",
    "format_stmt", "guard_to_dnf", "incremental_matrix", "isqrt_floor", "load_loop",
    "normalize", "parse", "parse_expr", "parse_guard", "pretty_print",
]
