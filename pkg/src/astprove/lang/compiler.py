"""
astprove/lang/compiler.py
=========================
Turns loop-free statements and guards into callables.

Two back ends share the same structure: a scalar one over Python ints (exact,
used by the semantics and the checkers) and a batch one over ``int64`` numpy
arrays (used by the simulator, where ``if`` evaluates both branches and merges
with ``np.where``).
"""

from __future__ import annotations

import math
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .syntax import (
    And, Assign, Expr, Guard, If, Literal, Not, Seq, Skip, Stmt, flatten_seq,
)

ScalarUpdate = Callable[[tuple[int, ...], tuple[int, ...]], tuple[int, ...]]
BatchUpdate = Callable[[Sequence[np.ndarray], Sequence[np.ndarray]], list[np.ndarray]]
Matrix = tuple[tuple[int, ...], ...]


def isqrt_floor(value: int) -> int:
    """Integer square root; negative arguments map to 0 so updates stay total."""
    return math.isqrt(value) if value > 0 else 0


def isqrt_batch(values: np.ndarray) -> np.ndarray:
    v = np.maximum(np.asarray(values, dtype=np.int64), 0)
    root = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    root -= (root * root > v).astype(np.int64)
    root += ((root + 1) * (root + 1) <= v).astype(np.int64)
    return root


def eval_expr(expr: Expr, env: Mapping, isqrt: Callable = isqrt_floor):
    """Evaluate ``expr`` with names looked up in ``env`` (ints or arrays)."""
    total = 0
    for term in expr.terms:
        value = term.coeff
        if term.pvar is not None:
            value = value * env[term.pvar]
        if term.rvar is not None:
            value = value * env[term.rvar]
        if term.sqrt_of is not None:
            value = value * isqrt(env[term.sqrt_of])
        total = total + value
    return total


# ─────────────────────────────────────────────────────────────
# Guards
# ─────────────────────────────────────────────────────────────

def compile_guard(guard: Guard) -> Callable[[Mapping], bool]:
    if isinstance(guard, Literal):
        poly = guard.as_nonnegative()
        return lambda env: poly.evaluate(env) >= 0
    if isinstance(guard, Not):
        inner = compile_guard(guard.operand)
        return lambda env: not inner(env)
    left, right = compile_guard(guard.left), compile_guard(guard.right)
    if isinstance(guard, And):
        return lambda env: left(env) and right(env)
    return lambda env: left(env) or right(env)


def compile_guard_batch(guard: Guard) -> Callable[[Mapping, int], np.ndarray]:
    if isinstance(guard, Literal):
        poly = guard.as_nonnegative()
        return lambda env, size: np.broadcast_to(poly.evaluate(env) >= 0, (size,))
    if isinstance(guard, Not):
        inner = compile_guard_batch(guard.operand)
        return lambda env, size: ~inner(env, size)
    left, right = compile_guard_batch(guard.left), compile_guard_batch(guard.right)
    if isinstance(guard, And):
        return lambda env, size: left(env, size) & right(env, size)
    return lambda env, size: left(env, size) | right(env, size)


# ─────────────────────────────────────────────────────────────
# Statements
# ─────────────────────────────────────────────────────────────

def _compile_scalar(stmt: Stmt) -> Callable[[dict], None]:
    if isinstance(stmt, Skip):
        return lambda env: None
    if isinstance(stmt, Assign):
        target, expr = stmt.target, stmt.expr

        def assign(env):
            env[target] = eval_expr(expr, env)
        return assign
    if isinstance(stmt, Seq):
        first, second = _compile_scalar(stmt.first), _compile_scalar(stmt.second)

        def seq(env):
            first(env)
            second(env)
        return seq
    if isinstance(stmt, If):
        test = compile_guard(stmt.guard)
        then, orelse = _compile_scalar(stmt.then), _compile_scalar(stmt.orelse)

        def branch(env):
            (then if test(env) else orelse)(env)
        return branch
    raise TypeError(f"cannot compile {type(stmt).__name__} inside a loop-free body")


def _compile_batch(stmt: Stmt, pvars: tuple[str, ...]) -> Callable[[dict, int], None]:
    if isinstance(stmt, Skip):
        return lambda env, size: None
    if isinstance(stmt, Assign):
        target, expr = stmt.target, stmt.expr

        def assign(env, size):
            value = eval_expr(expr, env, isqrt_batch)
            env[target] = np.broadcast_to(np.asarray(value, dtype=np.int64), (size,)).copy()
        return assign
    if isinstance(stmt, Seq):
        first, second = _compile_batch(stmt.first, pvars), _compile_batch(stmt.second, pvars)

        def seq(env, size):
            first(env, size)
            second(env, size)
        return seq
    if isinstance(stmt, If):
        test = compile_guard_batch(stmt.guard)
        then, orelse = _compile_batch(stmt.then, pvars), _compile_batch(stmt.orelse, pvars)

        def branch(env, size):
            mask = test(env, size)
            then_env, else_env = dict(env), dict(env)
            then(then_env, size)
            orelse(else_env, size)
            for name in pvars:
                env[name] = np.where(mask, then_env[name], else_env[name])
        return branch
    raise TypeError(f"cannot compile {type(stmt).__name__} inside a loop-free body")


def compile_update(body: Stmt, pvars: Sequence[str], rvars: Sequence[str]) -> ScalarUpdate:
    pvars, rvars = tuple(pvars), tuple(rvars)
    run = _compile_scalar(body)

    def update(pv, rv):
        env = dict(zip(pvars, pv))
        env.update(zip(rvars, rv))
        run(env)
        return tuple(env[name] for name in pvars)
    return update


def compile_update_batch(body: Stmt, pvars: Sequence[str], rvars: Sequence[str]) -> BatchUpdate:
    pvars, rvars = tuple(pvars), tuple(rvars)
    run = _compile_batch(body, pvars)

    def update(pv_arrays, rv_arrays):
        size = len(pv_arrays[0]) if pv_arrays else (len(rv_arrays[0]) if rv_arrays else 0)
        env = dict(zip(pvars, pv_arrays))
        env.update(zip(rvars, rv_arrays))
        run(env, size)
        return [env[name] for name in pvars]
    return update


def incremental_matrix(body: Stmt, pvars: Sequence[str], rvars: Sequence[str]) -> Optional[Matrix]:
    """Matrix ``A`` with ``F(pv, rv) = pv + A*rv``, or None when the body is not incremental.

    The body must be a sequence of ``skip`` and ``x := x + sum(c_i*r_i)`` where
    every sampling variable is used once and no assignment reads a variable
    written earlier.
    """
    pvars, rvars = list(pvars), list(rvars)
    matrix = [[0] * len(rvars) for _ in pvars]
    written: set[str] = set()
    consumed: set[str] = set()
    for stmt in flatten_seq(body):
        if isinstance(stmt, Skip):
            continue
        if not isinstance(stmt, Assign):
            return None
        target = stmt.target
        if target in written:
            return None
        own = [t for t in stmt.expr.terms if t.pvar == target]
        if len(own) != 1 or own[0].coeff != 1:
            return None
        row = matrix[pvars.index(target)]
        for term in stmt.expr.terms:
            if term is own[0]:
                continue
            if term.rvar is None or term.pvar is not None or term.sqrt_of is not None:
                return None
            if term.rvar in consumed:
                return None
            consumed.add(term.rvar)
            row[rvars.index(term.rvar)] += term.coeff
        written.add(target)
    return tuple(tuple(row) for row in matrix)


def compile_body(body: Stmt, pvars: Sequence[str], rvars: Sequence[str]) -> tuple[ScalarUpdate, Optional[Matrix]]:
    """``(F, A)`` for a loop body; ``A`` is None for non-incremental bodies."""
    return compile_update(body, pvars, rvars), incremental_matrix(body, pvars, rvars)
