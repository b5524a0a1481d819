"""
astprove/lincons.py
===================
Exact rational linear programming and the Farkas encoding of affine implications.

``solve`` runs a dense two-phase simplex over ``Fraction`` with Bland's rule, so
it never cycles and its answers are exact. ``farkas_encode`` turns
"every point of a polyhedron satisfies an affine inequality whose coefficients
are unknowns" into nonnegative multipliers and linear constraints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import EmptyPremise, Unbounded

logger = logging.getLogger("astprove.lincons")

SENSES = ("<=", "=", ">=")


# ─────────────────────────────────────────────────────────────
# Linear expressions over named unknowns
# ─────────────────────────────────────────────────────────────

class LinExpr:
    """``sum(coeff * var) + const`` with rational coefficients."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Optional[Mapping[str, object]] = None, const: object = 0):
        self.coeffs: dict[str, Fraction] = {
            k: Fraction(v) for k, v in (coeffs or {}).items() if v != 0
        }
        self.const = Fraction(const)

    @classmethod
    def var(cls, name: str, coeff: object = 1) -> "LinExpr":
        return cls({name: coeff})

    @classmethod
    def lift(cls, value: Union["LinExpr", int, Fraction]) -> "LinExpr":
        return value if isinstance(value, LinExpr) else cls(const=value)

    def __add__(self, other) -> "LinExpr":
        other = LinExpr.lift(other)
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0) + v
        return LinExpr(coeffs, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({k: -v for k, v in self.coeffs.items()}, -self.const)

    def __sub__(self, other) -> "LinExpr":
        return self + (-LinExpr.lift(other))

    def __rsub__(self, other) -> "LinExpr":
        return LinExpr.lift(other) - self

    def __mul__(self, scalar) -> "LinExpr":
        scalar = Fraction(scalar)
        return LinExpr({k: v * scalar for k, v in self.coeffs.items()}, self.const * scalar)

    __rmul__ = __mul__

    def value(self, assignment: Mapping[str, Fraction]) -> Fraction:
        return self.const + sum(v * assignment.get(k, 0) for k, v in self.coeffs.items())

    def __repr__(self) -> str:
        parts = [f"{v}*{k}" for k, v in self.coeffs.items()]
        return " + ".join(parts + [str(self.const)])


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str
    rhs: Fraction
    label: str = ""

    def lhs(self, assignment: Mapping[str, Fraction]) -> Fraction:
        return sum((c * assignment.get(v, 0) for v, c in self.coeffs), Fraction(0))

    def satisfied(self, assignment: Mapping[str, Fraction]) -> bool:
        value = self.lhs(assignment)
        if self.sense == "<=":
            return value <= self.rhs
        if self.sense == ">=":
            return value >= self.rhs
        return value == self.rhs


class LinSystem:
    """Variables (free or bounded below), linear constraints and an optional objective."""

    def __init__(self):
        self.variables: dict[str, Optional[Fraction]] = {}
        self.constraints: list[Constraint] = []
        self.objective: Optional[LinExpr] = None
        self.maximize = False

    def add_variable(self, name: str, lower: Optional[object] = None) -> LinExpr:
        bound = None if lower is None else Fraction(lower)
        if name in self.variables and self.variables[name] != bound:
            raise ValueError(f"variable '{name}' redeclared with a different bound")
        self.variables[name] = bound
        return LinExpr.var(name)

    def add(self, lhs: Union[LinExpr, int, Fraction], sense: str,
            rhs: Union[LinExpr, int, Fraction] = 0, label: str = "") -> None:
        """Add ``lhs sense rhs``; both sides may mention declared variables."""
        if sense not in SENSES:
            raise ValueError(f"unknown constraint sense '{sense}'")
        diff = LinExpr.lift(lhs) - LinExpr.lift(rhs)
        for name in diff.coeffs:
            if name not in self.variables:
                raise ValueError(f"constraint mentions undeclared variable '{name}'")
        self.constraints.append(Constraint(tuple(sorted(diff.coeffs.items())), sense, -diff.const, label))

    def set_objective(self, expr: LinExpr, maximize: bool = False) -> None:
        for name in expr.coeffs:
            if name not in self.variables:
                raise ValueError(f"objective mentions undeclared variable '{name}'")
        self.objective = expr
        self.maximize = maximize

    def extend(self, other: "LinSystem") -> "LinSystem":
        for name, bound in other.variables.items():
            self.add_variable(name, bound)
        self.constraints.extend(other.constraints)
        return self

    def copy(self) -> "LinSystem":
        out = LinSystem()
        out.variables = dict(self.variables)
        out.constraints = list(self.constraints)
        out.objective = self.objective
        out.maximize = self.maximize
        return out

    def violations(self, assignment: Mapping[str, Fraction]) -> list[Constraint]:
        bad = [c for c in self.constraints if not c.satisfied(assignment)]
        for name, bound in self.variables.items():
            if bound is not None and assignment.get(name, 0) < bound:
                bad.append(Constraint(((name, Fraction(1)),), ">=", bound, f"bound on {name}"))
        return bad


@dataclass(frozen=True)
class Feasible:
    assignment: dict[str, Fraction]
    objective: Optional[Fraction] = None

    def __getitem__(self, name: str) -> Fraction:
        return self.assignment[name]


@dataclass(frozen=True)
class Infeasible:
    reason: str = "no rational point satisfies the constraints"


# ─────────────────────────────────────────────────────────────
# Dense two-phase simplex
# ─────────────────────────────────────────────────────────────

class _Tableau:
    """Canonical-form tableau ``rows * x = rhs`` with basis columns kept as unit vectors."""

    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.obj: list[Fraction] = []
        self.obj_rhs = Fraction(0)
        self.pivots = 0

    def set_cost(self, cost: Sequence[Fraction]) -> None:
        """Install reduced costs for minimizing ``cost . x`` in the current basis."""
        self.obj = list(cost)
        self.obj_rhs = Fraction(0)
        for r, b in enumerate(self.basis):
            f = self.obj[b]
            if f:
                row = self.rows[r]
                self.obj = [o - f * a for o, a in zip(self.obj, row)]
                self.obj_rhs -= f * self.rhs[r]

    def pivot(self, r: int, c: int) -> None:
        piv = self.rows[r][c]
        row = [a / piv for a in self.rows[r]]
        self.rows[r] = row
        self.rhs[r] /= piv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                self.rows[i] = [a - f * b for a, b in zip(other, row)]
                self.rhs[i] -= f * self.rhs[r]
        f = self.obj[c]
        if f:
            self.obj = [a - f * b for a, b in zip(self.obj, row)]
            self.obj_rhs -= f * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1

    def optimize(self, allowed: Sequence[bool]) -> str:
        """Minimize with Bland's rule; returns ``'optimal'`` or ``'unbounded'``."""
        while True:
            entering = next((j for j, cost in enumerate(self.obj) if cost < 0 and allowed[j]), None)
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)

    def value(self) -> Fraction:
        return -self.obj_rhs

    def column_values(self, ncols: int) -> list[Fraction]:
        values = [Fraction(0)] * ncols
        for r, b in enumerate(self.basis):
            values[b] = self.rhs[r]
        return values


def _standard_form(system: LinSystem):
    """Map user variables to nonnegative columns and rows to equalities."""
    columns: list[tuple[str, int]] = []  # (variable, sign)
    var_cols: dict[str, list[tuple[int, int]]] = {}
    for name, bound in system.variables.items():
        var_cols[name] = [(len(columns), 1)]
        columns.append((name, 1))
        if bound is None:
            var_cols[name].append((len(columns), -1))
            columns.append((name, -1))
    nstruct = len(columns)

    rows: list[dict[int, Fraction]] = []
    senses: list[str] = []
    rhs: list[Fraction] = []
    for con in system.constraints:
        row: dict[int, Fraction] = {}
        b = con.rhs
        for name, coeff in con.coeffs:
            bound = system.variables[name]
            if bound is not None:
                b -= coeff * bound
            for col, sign in var_cols[name]:
                row[col] = row.get(col, 0) + sign * coeff
        sense = con.sense
        if b < 0:
            row = {k: -v for k, v in row.items()}
            b = -b
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        rows.append(row)
        senses.append(sense)
        rhs.append(b)
    return columns, var_cols, nstruct, rows, senses, rhs


def solve(system: LinSystem) -> Union[Feasible, Infeasible]:
    """Exact feasibility (and optimization when an objective is set).

    Raises
    ------
    Unbounded
        The objective is unbounded over a nonempty feasible region.
    """
    columns, var_cols, nstruct, sparse_rows, senses, rhs = _standard_form(system)
    m = len(sparse_rows)
    nslack = sum(1 for s in senses if s != "=")
    nart = sum(1 for s in senses if s != "<=")
    ncols = nstruct + nslack + nart

    rows: list[list[Fraction]] = []
    basis: list[int] = []
    artificial = [False] * ncols
    slack_col, art_col = nstruct, nstruct + nslack
    for i in range(m):
        row = [Fraction(0)] * ncols
        for col, coeff in sparse_rows[i].items():
            row[col] = Fraction(coeff)
        if senses[i] == "<=":
            row[slack_col] = Fraction(1)
            basis.append(slack_col)
            slack_col += 1
        else:
            if senses[i] == ">=":
                row[slack_col] = Fraction(-1)
                slack_col += 1
            row[art_col] = Fraction(1)
            artificial[art_col] = True
            basis.append(art_col)
            art_col += 1
        rows.append(row)

    tableau = _Tableau(rows, list(rhs), basis)
    everything = [True] * ncols

    if nart:
        tableau.set_cost([Fraction(1) if artificial[j] else Fraction(0) for j in range(ncols)])
        tableau.optimize(everything)
        if tableau.value() > 0:
            logger.debug(f"[astprove:lincons] Infeasible after {tableau.pivots} pivots "
                         f"({m} rows, {ncols} columns)")
            return Infeasible()
        _drive_out_artificials(tableau, artificial)

    allowed = [not a for a in artificial]
    objective_value = None
    if system.objective is not None:
        cost = [Fraction(0)] * ncols
        sign = -1 if system.maximize else 1
        for name, coeff in system.objective.coeffs.items():
            for col, col_sign in var_cols[name]:
                cost[col] += sign * col_sign * coeff
        tableau.set_cost(cost)
        if tableau.optimize(allowed) == "unbounded":
            raise Unbounded("objective is unbounded over the feasible region")

    values = tableau.column_values(ncols)
    assignment: dict[str, Fraction] = {}
    for name, bound in system.variables.items():
        total = Fraction(bound or 0)
        for col, sign in var_cols[name]:
            total += sign * values[col]
        assignment[name] = total
    if system.objective is not None:
        objective_value = system.objective.value(assignment)

    bad = system.violations(assignment)
    if bad:
        raise RuntimeError(f"simplex produced a point violating {len(bad)} constraints: {bad[:3]}")
    logger.debug(f"[astprove:lincons] Solved in {tableau.pivots} pivots ({m} rows, {ncols} columns)")
    return Feasible(assignment, objective_value)


def _drive_out_artificials(tableau: _Tableau, artificial: list[bool]) -> None:
    """Pivot zero-valued artificial columns out of the basis; drop redundant rows."""
    r = 0
    while r < len(tableau.rows):
        if artificial[tableau.basis[r]]:
            row = tableau.rows[r]
            col = next((j for j, a in enumerate(row) if a != 0 and not artificial[j]), None)
            if col is None:
                del tableau.rows[r]
                del tableau.rhs[r]
                del tableau.basis[r]
                continue
            tableau.pivot(r, col)
        r += 1


def minimize(system: LinSystem, objective: LinExpr) -> Union[Feasible, Infeasible]:
    trial = system.copy()
    trial.set_objective(objective)
    return solve(trial)


def maximize(system: LinSystem, objective: LinExpr) -> Union[Feasible, Infeasible]:
    trial = system.copy()
    trial.set_objective(objective, maximize=True)
    return solve(trial)


# ─────────────────────────────────────────────────────────────
# Polyhedra over program variables and the Farkas encoding
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class AffineIneq:
    """``sum(coeffs[x] * x) + const >= 0``."""

    coeffs: tuple[tuple[str, Fraction], ...]
    const: Fraction

    def value(self, point: Mapping[str, object]) -> Fraction:
        return self.const + sum(c * Fraction(point[x]) for x, c in self.coeffs)

    def as_linexpr(self) -> LinExpr:
        return LinExpr(dict(self.coeffs), self.const)


@dataclass(frozen=True)
class Polyhedron:
    variables: tuple[str, ...]
    inequalities: tuple[AffineIneq, ...] = field(default=())

    @classmethod
    def from_rows(cls, variables: Sequence[str],
                  rows: Iterable[tuple[Mapping[str, object], object]]) -> "Polyhedron":
        ineqs = []
        for coeffs, const in rows:
            unknown = set(coeffs) - set(variables)
            if unknown:
                raise ValueError(f"inequality mentions variables outside {tuple(variables)}: {unknown}")
            ineqs.append(AffineIneq(
                tuple(sorted((k, Fraction(v)) for k, v in coeffs.items() if v != 0)), Fraction(const)))
        return cls(tuple(variables), tuple(ineqs))

    def with_rows(self, rows: Iterable[tuple[Mapping[str, object], object]]) -> "Polyhedron":
        extra = Polyhedron.from_rows(self.variables, rows)
        return Polyhedron(self.variables, self.inequalities + extra.inequalities)

    def contains(self, point: Mapping[str, object]) -> bool:
        return all(ineq.value(point) >= 0 for ineq in self.inequalities)

    def system(self) -> LinSystem:
        """Rational relaxation with the program variables free."""
        lin = LinSystem()
        for name in self.variables:
            lin.add_variable(name)
        for ineq in self.inequalities:
            lin.add(ineq.as_linexpr(), ">=", 0)
        return lin

    def is_empty(self) -> bool:
        return isinstance(solve(self.system()), Infeasible)


@dataclass
class AffineTemplate:
    """Conclusion ``sum(coeffs[x] * x) + const >= 0`` whose coefficients are ``LinExpr`` over unknowns."""

    coeffs: dict[str, LinExpr]
    const: LinExpr

    def instantiate(self, assignment: Mapping[str, Fraction]) -> AffineIneq:
        return AffineIneq(
            tuple(sorted((x, e.value(assignment)) for x, e in self.coeffs.items())),
            self.const.value(assignment),
        )


def farkas_encode(premise: Polyhedron, conclusion: AffineTemplate, prefix: str = "farkas") -> LinSystem:
    """Constraints whose solutions make ``premise => conclusion`` valid.

    Introduces one multiplier ``lambda_i >= 0`` per premise inequality and asserts
    ``conclusion = sum(lambda_i * premise_i) + slack`` with a nonnegative constant
    slack. Unknowns already used by ``conclusion`` must be declared by the caller
    in the system the fragment is merged into; the fragment declares them free.

    Raises
    ------
    EmptyPremise
        The premise has no rational point.
    """
    if premise.is_empty():
        raise EmptyPremise(f"premise with {len(premise.inequalities)} inequalities is empty")

    fragment = LinSystem()
    for expr in list(conclusion.coeffs.values()) + [conclusion.const]:
        for name in expr.coeffs:
            fragment.add_variable(name)

    multipliers = [fragment.add_variable(f"{prefix}.lam{i}", lower=0)
                   for i in range(len(premise.inequalities))]
    for x in premise.variables:
        combo = LinExpr()
        for lam, ineq in zip(multipliers, premise.inequalities):
            coeff = dict(ineq.coeffs).get(x, 0)
            if coeff:
                combo = combo + lam * coeff
        fragment.add(conclusion.coeffs.get(x, LinExpr()), "=", combo, label=f"{prefix}:coeff[{x}]")
    offset = LinExpr()
    for lam, ineq in zip(multipliers, premise.inequalities):
        if ineq.const:
            offset = offset + lam * ineq.const
    fragment.add(conclusion.const, ">=", offset, label=f"{prefix}:const")
    return fragment
