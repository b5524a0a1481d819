"""
astprove/catalog.py
===================
Named ``.pwhile`` programs used by the CLI ``--example`` flag and the tests.
"""

from __future__ import annotations

import textwrap

from .lang.syntax import Program

PROGRAMS: dict[str, str] = {
    # two-point symmetric walk
    "symmetric_walk": """\
        pvar x;
        rvar r ~ table{-1:1/2, 1:1/2};
        while x >= 1 do
          x := x + r
        od
    """,
    "isqrt_walk": """\
        pvar x;
        rvar r ~ table{-1:1/2, 1:1/2};
        while x >= 1 do
          x := x + r*isqrt(x)
        od
    """,
    "geometric_walk": """\
        pvar x;
        rvar r ~ two_sided_geometric(1/2);
        while x >= 1 do
          x := x + r
        od
    """,
    "parabola_walk": """\
        pvar x, y;
        rvar r1 ~ table{0:1/2, 2:1/2};
        rvar r2 ~ table{0:1/2, 2:1/2};
        while y >= x*x + 1 do
          x := x + r1;
          y := y + r2
        od
    """,
    "biased_up_walk": """\
        pvar x;
        rvar r ~ table{-1:1/4, 1:3/4};
        while x >= 1 do
          x := x + r
        od
    """,
    "drift_positive": """\
        pvar x;
        rvar r ~ point(1);
        while x >= 1 do
          x := x + r
        od
    """,
    "countdown": """\
        pvar x;
        rvar r ~ point(-1);
        while x >= 1 do
          x := x + r
        od
    """,
    # bounded range, nonpositive mean, nonzero variance
    "bounded_range_walk": """\
        pvar x;
        rvar r ~ table{-2:1/4, 0:1/4, 1:1/2};
        while x >= 1 do
          x := x + r
        od
    """,
    "two_phase": """\
        pvar x, y;
        rvar r ~ table{-1:1/2, 1:1/2};
        rvar s ~ point(-1);
        y := 3;
        while x >= 1 do
          x := x + r
        od;
        while y >= 1 do
          y := y + s
        od
    """,
}


def names() -> list[str]:
    return sorted(PROGRAMS)


def source(name: str) -> str:
    try:
        return textwrap.dedent(PROGRAMS[name])
    except KeyError:
        raise KeyError(f"unknown example '{name}' (available: {', '.join(names())})") from None


def load(name: str) -> Program:
    from .lang.parser import parse

    return parse(source(name), path=f"<example:{name}>")
