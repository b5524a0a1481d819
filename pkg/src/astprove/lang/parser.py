"""
astprove/lang/parser.py
=======================
Tokenizer and recursive-descent parser for ``.pwhile`` sources.

A source file is a header of declarations followed by one program::

    pvar x;
    rvar r ~ table{-1:1/2, 1:1/2};
    while x >= 1 do x := x + r od

Statements are separated by ``;``; ``if g then S else S fi`` and
``while g do S od`` close with keywords, and ``( S )`` groups statements.
``a > b`` and ``a < b`` are integer sugar for ``a >= b + 1`` and ``a <= b - 1``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from ..dist import parse_dist
from ..errors import ParseError, UndeclaredVariable
from .syntax import (
    And, Assign, Expr, Guard, If, Literal, Loc, Not, Or, Poly, Program, RvarDecl,
    Seq, Skip, Stmt, Term, While,
)

logger = logging.getLogger("astprove.lang")

KEYWORDS = frozenset({
    "pvar", "rvar", "skip", "if", "then", "else", "fi", "while", "do", "od",
    "and", "or", "not", "isqrt",
})

_TOKEN_RE = re.compile(
    r"""
    (?P<NUMBER>\d+)
  | (?P<NAME>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<OP>:=|<=|>=|==|!=|\.\.|[-+*/<>;(){}:,~])
  | (?P<NEWLINE>\n)
  | (?P<SPACE>[ \t\r]+)
  | (?P<COMMENT>\#[^\n]*)
  | (?P<MISMATCH>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER | NAME | OP | EOF
    text: str
    line: int
    col: int
    pos: int

    @property
    def loc(self) -> Loc:
        return Loc(self.line, self.col)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        value = match.group()
        col = match.start() - line_start + 1
        if kind == "NEWLINE":
            line += 1
            line_start = match.end()
            continue
        if kind in ("SPACE", "COMMENT"):
            continue
        if kind == "MISMATCH":
            raise ParseError(f"unexpected character {value!r}", line, col)
        tokens.append(Token(kind, value, line, col, match.start()))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1, len(text)))
    return tokens


class Parser:
    """Recursive-descent parser over a token list.

    Parameters
    ----------
    text : str
        Source text.
    pvars, rvars : iterable of str
        Pre-declared variables, used when parsing a bare expression or guard.
    rational : bool
        Accept ``num/den`` coefficients (certificate expressions).
    """

    def __init__(self, text: str, pvars: Iterable[str] = (), rvars: Iterable[str] = (),
                 rational: bool = False, path: Optional[str] = None):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.pvars: list[str] = list(pvars)
        self.rvars: list[str] = list(rvars)
        self.rational = rational
        self.path = path

    # ── token helpers ──────────────────────────────────────

    @property
    def tok(self) -> Token:
        return self.tokens[self.index]

    def _at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "NAME") and self.tok.text == text

    def _advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.index += 1
        return tok

    def _expect(self, text: str) -> Token:
        if not self._at(text):
            self._fail(f"unexpected {self._describe(self.tok)}", expected=f"'{text}'")
        return self._advance()

    def _fail(self, message: str, expected: Optional[str] = None, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col, expected=expected, path=self.path)

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind == "EOF" else f"'{tok.text}'"

    def _name(self) -> Token:
        tok = self.tok
        if tok.kind != "NAME" or tok.text in KEYWORDS:
            self._fail(f"unexpected {self._describe(tok)}", expected="a variable name")
        return self._advance()

    def _undeclared(self, tok: Token):
        raise UndeclaredVariable(tok.text, tok.line, tok.col, path=self.path)

    # ── program ────────────────────────────────────────────

    def parse_program(self) -> Program:
        decls: list[RvarDecl] = []
        while self._at("pvar") or self._at("rvar"):
            if self._advance().text == "pvar":
                self._declare(self._name(), self.pvars)
                while self._at(","):
                    self._advance()
                    self._declare(self._name(), self.pvars)
                self._expect(";")
            else:
                decls.append(self._rvar_decl())
        body = self._seq()
        if self.tok.kind != "EOF":
            self._fail(f"unexpected {self._describe(self.tok)}", expected="';' or end of input")
        return Program(tuple(self.pvars), tuple(decls), body, source=self.text, path=self.path)

    def _declare(self, tok: Token, into: list[str]) -> None:
        if tok.text in self.pvars or tok.text in self.rvars:
            self._fail(f"variable '{tok.text}' declared twice", tok=tok)
        into.append(tok.text)

    def _rvar_decl(self) -> RvarDecl:
        name = self._name()
        self._expect("~")
        start = self.tok
        while not self._at(";"):
            if self.tok.kind == "EOF":
                self._fail("unterminated declaration", expected="';'")
            self._advance()
        dist_text = self.text[start.pos:self.tok.pos]
        try:
            dist = parse_dist(dist_text)
        except ParseError as exc:
            raise ParseError(exc.message, start.line, start.col, path=self.path) from exc
        self._advance()
        self._declare(name, self.rvars)
        return RvarDecl(name.text, dist)

    # ── statements ─────────────────────────────────────────

    def _seq(self) -> Stmt:
        stmts = [self._stmt()]
        while self._at(";"):
            self._advance()
            if self.tok.kind == "EOF" or any(self._at(k) for k in ("od", "fi", "else", ")")):
                break
            stmts.append(self._stmt())
        out = stmts[-1]
        for stmt in reversed(stmts[:-1]):
            out = Seq(stmt, out, loc=stmt.loc)
        return out

    def _stmt(self) -> Stmt:
        tok = self.tok
        if self._at("skip"):
            self._advance()
            return Skip(loc=tok.loc)
        if self._at("if"):
            self._advance()
            guard = self._guard()
            self._expect("then")
            then = self._seq()
            orelse: Stmt = Skip(loc=self.tok.loc)
            if self._at("else"):
                self._advance()
                orelse = self._seq()
            self._expect("fi")
            return If(guard, then, orelse, loc=tok.loc)
        if self._at("while"):
            self._advance()
            guard = self._guard()
            self._expect("do")
            body = self._seq()
            self._expect("od")
            return While(guard, body, loc=tok.loc)
        if self._at("("):
            self._advance()
            inner = self._seq()
            self._expect(")")
            return inner
        if tok.kind == "NAME" and tok.text not in KEYWORDS:
            target = self._advance()
            if target.text in self.rvars:
                self._fail(f"cannot assign to sampling variable '{target.text}'", tok=target)
            if target.text not in self.pvars:
                self._undeclared(target)
            self._expect(":=")
            return Assign(target.text, self._expr(), loc=tok.loc)
        self._fail(f"unexpected {self._describe(tok)}", expected="a statement")

    # ── update expressions ─────────────────────────────────

    def _expr(self, allow_isqrt_term: bool = False) -> Expr:
        start = self.tok
        sign = 1
        if self._at("+") or self._at("-"):
            sign = -1 if self._advance().text == "-" else 1
        terms = [self._term(sign, allow_isqrt_term)]
        while self._at("+") or self._at("-"):
            sign = -1 if self._advance().text == "-" else 1
            if self._at("-"):
                self._advance()
                sign = -sign
            terms.append(self._term(sign, allow_isqrt_term))
        return Expr(tuple(terms), loc=start.loc)

    def _number(self):
        tok = self._advance()
        value = int(tok.text)
        if self.rational and self._at("/"):
            self._advance()
            den = self.tok
            if den.kind != "NUMBER":
                self._fail(f"unexpected {self._describe(den)}", expected="a denominator")
            self._advance()
            if int(den.text) == 0:
                self._fail("zero denominator", tok=den)
            return Fraction(value, int(den.text))
        return value

    def _term(self, sign: int, allow_isqrt_term: bool) -> Term:
        start = self.tok
        coeff = sign
        pvars: list[str] = []
        rvars: list[str] = []
        roots: list[str] = []
        while True:
            tok = self.tok
            if tok.kind == "NUMBER":
                coeff = coeff * self._number()
            elif self._at("isqrt"):
                self._advance()
                self._expect("(")
                arg = self._name()
                if arg.text in self.rvars:
                    self._fail("isqrt applies to program variables only", tok=arg)
                if arg.text not in self.pvars:
                    self._undeclared(arg)
                self._expect(")")
                roots.append(arg.text)
            elif tok.kind == "NAME" and tok.text not in KEYWORDS:
                self._advance()
                if tok.text in self.pvars:
                    pvars.append(tok.text)
                elif tok.text in self.rvars:
                    rvars.append(tok.text)
                else:
                    self._undeclared(tok)
            else:
                self._fail(f"unexpected {self._describe(tok)}", expected="a number, variable or isqrt(...)")
            if not self._at("*"):
                break
            self._advance()

        if isinstance(coeff, Fraction) and coeff.denominator == 1:
            coeff = int(coeff)
        shape = (len(pvars), len(rvars), len(roots))
        if shape == (0, 0, 0):
            return Term(coeff)
        if shape == (1, 0, 0):
            return Term(coeff, pvar=pvars[0])
        if shape == (0, 1, 0):
            return Term(coeff, rvar=rvars[0])
        if shape == (0, 1, 1):
            return Term(coeff, rvar=rvars[0], sqrt_of=roots[0])
        if shape == (0, 0, 1) and allow_isqrt_term:
            return Term(coeff, sqrt_of=roots[0])
        self._fail("term must have the shape c, c*x, c*r or c*r*isqrt(x)", tok=start)

    # ── guards ─────────────────────────────────────────────

    def _guard(self) -> Guard:
        left = self._conj()
        while self._at("or"):
            tok = self._advance()
            left = Or(left, self._conj(), loc=tok.loc)
        return left

    def _conj(self) -> Guard:
        left = self._neg()
        while self._at("and"):
            tok = self._advance()
            left = And(left, self._neg(), loc=tok.loc)
        return left

    def _neg(self) -> Guard:
        if self._at("not"):
            tok = self._advance()
            return Not(self._neg(), loc=tok.loc)
        if self._at("("):
            mark = self.index
            try:
                return self._literal()
            except ParseError:
                self.index = mark
            self._advance()
            inner = self._guard()
            self._expect(")")
            return inner
        return self._literal()

    def _literal(self) -> Guard:
        start = self.tok
        lhs = self._poly()
        op = self.tok
        if op.text not in ("<=", ">=", "<", ">", "==", "!=") or op.kind != "OP":
            self._fail(f"unexpected {self._describe(op)}", expected="a comparison")
        self._advance()
        rhs = self._poly()
        for side in (lhs, rhs):
            if side.degree > 2:
                self._fail("guard polynomials may have degree at most 2", tok=start)
        one = Poly.constant(1)
        loc = start.loc
        if op.text == ">":
            return Literal(lhs, ">=", rhs + one, loc=loc)
        if op.text == "<":
            return Literal(lhs, "<=", rhs - one, loc=loc)
        if op.text == "==":
            return And(Literal(lhs, ">=", rhs, loc=loc), Literal(lhs, "<=", rhs, loc=loc), loc=loc)
        if op.text == "!=":
            return Or(Literal(lhs, ">=", rhs + one, loc=loc), Literal(lhs, "<=", rhs - one, loc=loc), loc=loc)
        return Literal(lhs, op.text, rhs, loc=loc)

    def _poly(self) -> Poly:
        negate = False
        if self._at("+") or self._at("-"):
            negate = self._advance().text == "-"
        total = self._pterm()
        if negate:
            total = -total
        while self._at("+") or self._at("-"):
            op = self._advance().text
            term = self._pterm()
            total = total + term if op == "+" else total - term
        return total

    def _pterm(self) -> Poly:
        value = self._pfactor()
        while self._at("*"):
            self._advance()
            value = value * self._pfactor()
        return value

    def _pfactor(self) -> Poly:
        tok = self.tok
        if tok.kind == "NUMBER":
            self._advance()
            return Poly.constant(int(tok.text))
        if self._at("-"):
            self._advance()
            return -self._pfactor()
        if self._at("("):
            self._advance()
            inner = self._poly()
            self._expect(")")
            return inner
        if tok.kind == "NAME" and tok.text not in KEYWORDS:
            self._advance()
            if tok.text in self.rvars:
                self._fail(f"sampling variable '{tok.text}' may not appear in a guard", tok=tok)
            if tok.text not in self.pvars:
                self._undeclared(tok)
            return Poly.variable(tok.text)
        self._fail(f"unexpected {self._describe(tok)}", expected="a polynomial term")


# ─────────────────────────────────────────────────────────────
# Entry points
# ─────────────────────────────────────────────────────────────

def parse(text: str, path: Optional[str] = None) -> Program:
    """Parse a ``.pwhile`` source with its declaration header."""
    program = Parser(text, path=path).parse_program()
    logger.debug(f"[astprove:lang] Parsed {len(program.pvars)} program and "
                 f"{len(program.rvars)} sampling variables")
    return program


def parse_expr(text: str, pvars: Iterable[str], rvars: Iterable[str] = (),
               rational: bool = False, allow_isqrt_term: bool = False) -> Expr:
    parser = Parser(text, pvars, rvars, rational=rational)
    expr = parser._expr(allow_isqrt_term)
    if parser.tok.kind != "EOF":
        parser._fail(f"unexpected {parser._describe(parser.tok)}", expected="end of expression")
    return expr


def parse_guard(text: str, pvars: Iterable[str]) -> Guard:
    parser = Parser(text, pvars)
    guard = parser._guard()
    if parser.tok.kind != "EOF":
        parser._fail(f"unexpected {parser._describe(parser.tok)}", expected="end of guard")
    return guard
