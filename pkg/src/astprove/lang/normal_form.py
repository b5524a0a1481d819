"""
astprove/lang/normal_form.py
============================
Splits a program into loop-free blocks and single while loops.

A top-level sequence is cut at every ``while``. Conditionals without loops stay
inside loop-free blocks; a loop nested in another loop or in a branch is rejected.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from ..dist import SamplingFunction
from ..errors import LoopInsideBranch, NestedLoop
from .compiler import (
    compile_body, compile_guard, compile_guard_batch, compile_update, compile_update_batch,
)
from .printer import format_guard, format_stmt
from .syntax import (
    And, Assign, Guard, If, Literal, Loc, Not, Poly, Program, Seq, Stmt, While, contains_while,
    flatten_seq, guard_degree, join_seq,
)

logger = logging.getLogger("astprove.lang")

Conjunction = tuple[Poly, ...]  # every polynomial >= 0
Dnf = tuple[Conjunction, ...]


# ─────────────────────────────────────────────────────────────
# Guard DNF
# ─────────────────────────────────────────────────────────────

def _tighten(poly: Poly) -> Poly:
    """Divide an affine integer literal by the gcd of its variable coefficients.

    ``sum(a_i x_i) + b >= 0`` over integers is equivalent to
    ``sum(a_i/g x_i) + floor(b/g) >= 0``.
    """
    if poly.degree != 1:
        return poly
    g = 0
    for coeff in poly.linear_coeffs().values():
        g = math.gcd(g, coeff)
    if g <= 1:
        return poly
    coeffs = {m: c // g for m, c in poly.terms if m}
    coeffs[()] = poly.const // g
    return Poly.from_dict(coeffs)


def _dnf(guard: Guard, negate: bool) -> list[list[Poly]]:
    if isinstance(guard, Literal):
        poly = guard.as_nonnegative()
        if negate:
            poly = -poly - Poly.constant(1)
        return [[_tighten(poly)]]
    if isinstance(guard, Not):
        return _dnf(guard.operand, not negate)
    left, right = _dnf(guard.left, negate), _dnf(guard.right, negate)
    conjunctive = isinstance(guard, And) != negate
    if conjunctive:
        return [a + b for a in left for b in right]
    return left + right


def guard_to_dnf(guard: Guard) -> Dnf:
    """Disjunctive normal form over literals ``e >= 0``.

    Constant literals are folded: a false one removes its disjunct, a true one is
    dropped. An empty disjunction means the guard is unsatisfiable; a disjunct with
    no literals means it always holds.
    """
    out: list[Conjunction] = []
    for conj in _dnf(guard, False):
        kept: list[Poly] = []
        feasible = True
        for poly in conj:
            if poly.degree == 0:
                if poly.const < 0:
                    feasible = False
                    break
                continue
            if poly not in kept:
                kept.append(poly)
        if feasible and tuple(kept) not in out:
            out.append(tuple(kept))
    return tuple(out)


# ─────────────────────────────────────────────────────────────
# Components
# ─────────────────────────────────────────────────────────────

class SingleWhileLoop:
    """``while guard do body od`` with its compiled update ``F``.

    Parameters
    ----------
    guard : Guard
        Loop condition over program variables.
    body : Stmt
        Loop-free body.
    pvars : sequence of str
        Program variables in valuation order.
    sampling : SamplingFunction
        Distribution of every sampling variable, in sample-vector order.
    """

    def __init__(self, guard: Guard, body: Stmt, pvars: Sequence[str], sampling: SamplingFunction,
                 loop_id: int = 0, loc: Optional[Loc] = None):
        inner = contains_while(body)
        if inner is not None:
            raise NestedLoop(*_location(inner))
        self.guard = guard
        self.body = body
        self.pvars = tuple(pvars)
        self.rvars = sampling.names
        self.sampling = sampling
        self.loop_id = loop_id
        self.loc = loc
        self.update, self.incremental = compile_body(body, self.pvars, self.rvars)
        self._update_batch = compile_update_batch(body, self.pvars, self.rvars)
        self._holds = compile_guard(guard)
        self._holds_batch = compile_guard_batch(guard)

    def __repr__(self) -> str:
        return f"SingleWhileLoop(#{self.loop_id}: {self.describe()})"

    def describe(self) -> str:
        return f"while {format_guard(self.guard)} do {format_stmt(self.body)} od"

    @property
    def is_incremental(self) -> bool:
        return self.incremental is not None

    def holds(self, pv: Sequence[int]) -> bool:
        return bool(self._holds(dict(zip(self.pvars, pv))))

    def holds_batch(self, pv_arrays: Sequence[np.ndarray]) -> np.ndarray:
        size = len(pv_arrays[0]) if pv_arrays else 0
        return np.asarray(self._holds_batch(dict(zip(self.pvars, pv_arrays)), size), dtype=bool)

    def update_batch(self, pv_arrays: Sequence[np.ndarray], rv_arrays: Sequence[np.ndarray]) -> list[np.ndarray]:
        return self._update_batch(pv_arrays, rv_arrays)

    @cached_property
    def guard_dnf(self) -> Dnf:
        return guard_to_dnf(self.guard)

    @cached_property
    def guard_degree(self) -> int:
        return guard_degree(self.guard)

    @property
    def guard_is_affine(self) -> bool:
        return self.guard_degree <= 1


@dataclass(frozen=True)
class LoopFreeBlock:
    stmt: Stmt

    def uses_sampling(self) -> bool:
        def walk(stmt: Stmt) -> bool:
            if isinstance(stmt, If):
                return walk(stmt.then) or walk(stmt.orelse)
            if isinstance(stmt, Seq):
                return walk(stmt.first) or walk(stmt.second)
            if isinstance(stmt, Assign):
                return bool(stmt.expr.rvars())
            return False
        return walk(self.stmt)

    def execute(self, pv: Sequence[int], pvars: Sequence[str]) -> tuple[int, ...]:
        """Run a sampling-free block exactly."""
        return compile_update(self.stmt, pvars, ())(tuple(pv), ())


Component = Union[LoopFreeBlock, SingleWhileLoop]


@dataclass(frozen=True)
class NormalizedProgram:
    program: Program
    components: tuple[Component, ...]

    @property
    def loops(self) -> tuple[SingleWhileLoop, ...]:
        return tuple(c for c in self.components if isinstance(c, SingleWhileLoop))


def _location(stmt: Stmt) -> tuple[Optional[int], Optional[int]]:
    return (stmt.loc.line, stmt.loc.col) if stmt.loc else (None, None)


def normalize(program: Program) -> NormalizedProgram:
    sampling = SamplingFunction.from_pairs([(d.name, d.dist) for d in program.rvars])
    components: list[Component] = []
    pending: list[Stmt] = []
    loop_id = 0

    def flush():
        if pending:
            components.append(LoopFreeBlock(join_seq(list(pending))))
            pending.clear()

    for stmt in flatten_seq(program.body):
        if isinstance(stmt, While):
            inner = contains_while(stmt.body)
            if inner is not None:
                raise NestedLoop(*_location(inner), path=program.path)
            flush()
            components.append(SingleWhileLoop(stmt.guard, stmt.body, program.pvars, sampling,
                                              loop_id=loop_id, loc=stmt.loc))
            loop_id += 1
            continue
        inner = contains_while(stmt)
        if inner is not None:
            raise LoopInsideBranch(*_location(inner), path=program.path)
        pending.append(stmt)
    flush()
    logger.debug(f"[astprove:lang] Normalized into {len(components)} components ({loop_id} loops)")
    return NormalizedProgram(program, tuple(components))
