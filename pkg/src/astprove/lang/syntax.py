"""
astprove/lang/syntax.py
=======================
Abstract syntax of probabilistic while-programs.

Update expressions are sums of terms of four shapes: constant, ``c*x``,
``c*r`` and ``c*r*isqrt(x)`` (``x`` a program variable, ``r`` a sampling
variable). Certificate expressions reuse the same type with rational
coefficients and may contain ``c*isqrt(x)``.

Guards are and/or/not combinations of literals comparing integer polynomials of
degree at most two over program variables.

Every node carries an optional source location that is ignored by equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

from ..dist import DiscreteDist

Number = Union[int, Fraction]


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _loc_field():
    return field(default=None, compare=False, repr=False)


# ─────────────────────────────────────────────────────────────
# Expressions
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Term:
    coeff: Number
    pvar: Optional[str] = None
    rvar: Optional[str] = None
    sqrt_of: Optional[str] = None

    @property
    def is_constant(self) -> bool:
        return self.pvar is None and self.rvar is None and self.sqrt_of is None

    def variables(self) -> Iterator[str]:
        for name in (self.pvar, self.rvar, self.sqrt_of):
            if name is not None:
                yield name


@dataclass(frozen=True)
class Expr:
    terms: tuple[Term, ...]
    loc: Optional[Loc] = _loc_field()

    def pvars(self) -> set[str]:
        return {n for t in self.terms for n in (t.pvar, t.sqrt_of) if n is not None}

    def rvars(self) -> set[str]:
        return {t.rvar for t in self.terms if t.rvar is not None}

    @property
    def has_isqrt(self) -> bool:
        return any(t.sqrt_of is not None for t in self.terms)


# ─────────────────────────────────────────────────────────────
# Guard polynomials
# ─────────────────────────────────────────────────────────────

Monomial = tuple[str, ...]


@dataclass(frozen=True)
class Poly:
    """Integer polynomial as sorted ``(monomial, coefficient)`` pairs, zeros dropped."""

    terms: tuple[tuple[Monomial, int], ...] = ()

    @classmethod
    def from_dict(cls, coeffs: dict[Monomial, int]) -> "Poly":
        items = [(tuple(sorted(m)), c) for m, c in coeffs.items()]
        merged: dict[Monomial, int] = {}
        for mono, coeff in items:
            merged[mono] = merged.get(mono, 0) + coeff
        return cls(tuple(sorted(((m, c) for m, c in merged.items() if c != 0), key=_mono_key)))

    @classmethod
    def constant(cls, value: int) -> "Poly":
        return cls.from_dict({(): value})

    @classmethod
    def variable(cls, name: str) -> "Poly":
        return cls.from_dict({(name,): 1})

    def as_dict(self) -> dict[Monomial, int]:
        return dict(self.terms)

    def __add__(self, other: "Poly") -> "Poly":
        out = self.as_dict()
        for mono, coeff in other.terms:
            out[mono] = out.get(mono, 0) + coeff
        return Poly.from_dict(out)

    def __neg__(self) -> "Poly":
        return Poly.from_dict({m: -c for m, c in self.terms})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[Monomial, int] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                mono = tuple(sorted(m1 + m2))
                out[mono] = out.get(mono, 0) + c1 * c2
        return Poly.from_dict(out)

    @property
    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)

    @property
    def const(self) -> int:
        return self.as_dict().get((), 0)

    def variables(self) -> set[str]:
        return {v for m, _ in self.terms for v in m}

    def linear_coeffs(self) -> dict[str, int]:
        return {m[0]: c for m, c in self.terms if len(m) == 1}

    def evaluate(self, env):
        """Evaluate with ``env`` mapping names to ints or numpy arrays."""
        total = 0
        for mono, coeff in self.terms:
            value = coeff
            for name in mono:
                value = value * env[name]
            total = total + value
        return total


def _mono_key(item):
    mono, _ = item
    return (-len(mono), mono)


# ─────────────────────────────────────────────────────────────
# Guards
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Literal:
    lhs: Poly
    op: str  # "<=" or ">="
    rhs: Poly
    loc: Optional[Loc] = _loc_field()

    def as_nonnegative(self) -> Poly:
        """The polynomial ``e`` with literal equivalent to ``e >= 0``."""
        return self.lhs - self.rhs if self.op == ">=" else self.rhs - self.lhs


@dataclass(frozen=True)
class Not:
    operand: "Guard"
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class And:
    left: "Guard"
    right: "Guard"
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class Or:
    left: "Guard"
    right: "Guard"
    loc: Optional[Loc] = _loc_field()


Guard = Union[Literal, Not, And, Or]


def guard_literals(guard: Guard) -> Iterator[Literal]:
    if isinstance(guard, Literal):
        yield guard
    elif isinstance(guard, Not):
        yield from guard_literals(guard.operand)
    else:
        yield from guard_literals(guard.left)
        yield from guard_literals(guard.right)


def guard_degree(guard: Guard) -> int:
    return max(lit.as_nonnegative().degree for lit in guard_literals(guard))


# ─────────────────────────────────────────────────────────────
# Statements and programs
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Skip:
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class If:
    guard: Guard
    then: "Stmt"
    orelse: "Stmt"
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class While:
    guard: Guard
    body: "Stmt"
    loc: Optional[Loc] = _loc_field()


Stmt = Union[Skip, Assign, Seq, If, While]


def contains_while(stmt: Stmt) -> Optional[While]:
    """First while statement inside ``stmt`` (pre-order), or None."""
    if isinstance(stmt, While):
        return stmt
    if isinstance(stmt, Seq):
        return contains_while(stmt.first) or contains_while(stmt.second)
    if isinstance(stmt, If):
        return contains_while(stmt.then) or contains_while(stmt.orelse)
    return None


def flatten_seq(stmt: Stmt) -> list[Stmt]:
    if isinstance(stmt, Seq):
        return flatten_seq(stmt.first) + flatten_seq(stmt.second)
    return [stmt]


def join_seq(stmts: list[Stmt]) -> Stmt:
    """Right-nested sequence of ``stmts`` (a single statement is returned as is)."""
    out = stmts[-1]
    for stmt in reversed(stmts[:-1]):
        out = Seq(stmt, out, loc=stmt.loc)
    return out


@dataclass(frozen=True)
class RvarDecl:
    name: str
    dist: DiscreteDist


@dataclass(frozen=True)
class Program:
    pvars: tuple[str, ...]
    rvars: tuple[RvarDecl, ...]
    body: Stmt
    source: Optional[str] = field(default=None, compare=False, repr=False)
    path: Optional[str] = field(default=None, compare=False, repr=False)

    @property
    def rvar_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.rvars)
