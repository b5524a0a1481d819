"""
astprove/errors.py
==================
Exception hierarchy shared by every module.

All domain failures derive from :class:`AstproveError` so the CLI can catch them
at one place. Verdict-shaped outcomes (not found, refuted, inconclusive) are
returned as values and never raised.
"""

from __future__ import annotations

from typing import Optional


class AstproveError(Exception):
    """Base class for every error raised by astprove."""


class LocatedError(AstproveError):
    """An error that points at a place in a source file."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None,
                 path: Optional[str] = None):
        self.message = message
        self.line = line
        self.col = col
        self.path = path
        super().__init__(self._render())

    def _render(self) -> str:
        if self.line is None:
            return self.message
        where = f"{self.line}:{self.col or 0}"
        if self.path:
            where = f"{self.path}:{where}"
        return f"{where}: {self.message}"

    def with_path(self, path: str) -> "LocatedError":
        """Attach the file name after the fact (the parser only sees text)."""
        self.path = path
        self.args = (self._render(),)
        return self


# ─────────────────────────────────────────────────────────────
# Front end
# ─────────────────────────────────────────────────────────────

class ParseError(LocatedError):
    """Source text does not match the grammar."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None,
                 expected: Optional[str] = None, path: Optional[str] = None):
        self.expected = expected
        if expected:
            message = f"{message} (expected {expected})"
        super().__init__(message, line, col, path)


class UndeclaredVariable(LocatedError):
    def __init__(self, name: str, line: Optional[int] = None, col: Optional[int] = None,
                 path: Optional[str] = None):
        self.name = name
        super().__init__(f"undeclared variable '{name}'", line, col, path)


class NestedLoop(LocatedError):
    """A while loop appears inside another loop body."""

    def __init__(self, line: Optional[int] = None, col: Optional[int] = None,
                 path: Optional[str] = None):
        super().__init__(
            "nested while loop: the certificate rules cannot be directly extended "
            "to nested probabilistic loops",
            line, col, path,
        )


class LoopInsideBranch(LocatedError):
    def __init__(self, line: Optional[int] = None, col: Optional[int] = None,
                 path: Optional[str] = None):
        super().__init__("while loop inside a conditional branch is not supported",
                         line, col, path)


# ─────────────────────────────────────────────────────────────
# Distributions and semantics
# ─────────────────────────────────────────────────────────────

class InfiniteSupport(AstproveError):
    """An operation needs finite support but met a two-sided geometric variable."""


class GrowthUnbounded(AstproveError):
    """Expectation over infinite support requested without a growth constant."""


class StateExplosion(AstproveError):
    def __init__(self, cap: int, reached: int):
        self.cap = cap
        self.reached = reached
        super().__init__(f"exact DP exceeded {cap} state-step pairs (reached {reached})")


# ─────────────────────────────────────────────────────────────
# Certificates, constraints and synthesis
# ─────────────────────────────────────────────────────────────

class UnsupportedSymbolic(AstproveError):
    """Symbolic checking is out of scope for this loop/candidate pair."""


class IntervalTooWide(AstproveError):
    """A certified expectation interval straddles the threshold it is compared with."""


class NotIncremental(AstproveError):
    def __init__(self, detail: str = ""):
        msg = ("loop body is not incremental: an incremental body is a sequential "
               "composition of x := x + sum(c_i * r_i)")
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class SupportTooLarge(AstproveError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"joint support has {size} points; sign enumeration is capped at {cap}")


class Unbounded(AstproveError):
    """The linear objective is unbounded over the feasible region."""


class EmptyPremise(AstproveError):
    """The premise polyhedron has no rational point; the implication is vacuous."""


class TViolatesSmallness(AstproveError):
    def __init__(self, t, t_max):
        self.t = t
        self.t_max = t_max
        super().__init__(f"t={t} violates the smallness condition (largest admissible t is {t_max})")


class CertificateFormatError(AstproveError):
    """A certificate file is malformed."""
