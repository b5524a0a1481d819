"""
astprove/cli.py
===============
astprove Command Line Interface.
"""

import argparse
import logging
import sys
import textwrap
from fractions import Fraction
from pathlib import Path

from . import catalog
from .analysis import DEFAULT_KS, DEFAULT_TRIALS, analyze_program, exit_code, parse_init, post_check_failed
from .background import shutdown_executors
from .certificates import Box, Status, SupermartingaleMap, Symbolic, Verdict, check_lpf, check_smap, replay
from .context import precision_scope, workers_scope
from .errors import AstproveError, InfiniteSupport, StateExplosion
from .lang import normalize, parse, pretty_print
from .report import load_certificate, report_to_frame
from .semantics import exact_tail
from .simulator import estimate_tail, estimates_to_frame
from .tailbounds import BoundInput, BoundKind, bound_series, series_to_frame

logger = logging.getLogger("astprove.cli")

CHECK_EXIT = {
    Verdict.CERTIFIED: 0,
    Verdict.CERTIFIED_ON_BOX: 0,
    Verdict.REFUTED: 4,
    Verdict.INCONCLUSIVE: 5,
}


def _ks(text):
    try:
        ks = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("every k must be at least 1")
    return ks


def _load_program(args):
    if args.example:
        return catalog.load(args.example)
    if not args.file:
        raise ValueError("give a program file or --example NAME")
    path = Path(args.file)
    if not path.exists():
        raise ValueError(f"program '{path}' does not exist")
    return parse(path.read_text(encoding="utf-8"), path=str(path))


def _loop(args, norm):
    loops = norm.loops
    if not loops:
        raise ValueError("the program has no while loop")
    if not 0 <= args.loop < len(loops):
        raise ValueError(f"loop index {args.loop} out of range (program has {len(loops)} loops)")
    return loops[args.loop]


# ─────────────────────────────────────────────────────────────
# Commands
# ─────────────────────────────────────────────────────────────

def cmd_analyze(args):
    program = _load_program(args)
    norm = normalize(program)
    init = parse_init(args.init, program.pvars)
    box = Box.parse(args.box, program.pvars) if args.box else None
    user = load_certificate(args.cert).to_certificate(program.pvars) if args.cert else None

    report = analyze_program(norm, init, ks=args.ks, trials=args.trials, seed=args.seed, box=box, user=user)
    text = report.to_json()
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        report_to_frame(report).to_csv(out.with_suffix(".csv"), index=False)
        print(f"[astprove] Report written to {out} (CSV: {out.with_suffix('.csv')})")
    else:
        sys.stdout.write(text)

    for entry in report.loops:
        print(f"loop #{entry.loop_id}: {entry.method} -> {entry.verdict} ({entry.tail_class})", file=sys.stderr)
    if post_check_failed(report):
        print("error: a tail bound fell below the empirical Wilson-95 lower limit", file=sys.stderr)
        return 1
    return exit_code(report)


def cmd_check(args):
    program = _load_program(args)
    loop = _loop(args, normalize(program))
    cand = load_certificate(args.cert).to_certificate(program.pvars)
    box = Box.parse(args.box, program.pvars) if args.box else None
    domain = box if (box is not None and args.bounded) else Symbolic(fallback=box)

    if isinstance(cand, SupermartingaleMap):
        report = check_smap(loop, cand, domain)
    else:
        report = check_lpf(loop, cand, domain)

    print(f"verdict: {report.verdict.value} ({report.mode})")
    for name, result in report.conditions.items():
        line = f"  {name:<7} {result.status.value}"
        if result.detail:
            line += f"  {result.detail}"
        print(line)
        if result.status is Status.VIOLATED and result.witness is not None:
            genuine = "replayed" if replay(loop, cand, result.witness) else "NOT replayable"
            print(f"          witness: {result.witness.describe()} [{genuine}]")
    for note in report.notes:
        print(f"  note: {note}")
    return CHECK_EXIT[report.verdict]


def cmd_simulate(args):
    program = _load_program(args)
    loop = _loop(args, normalize(program))
    init = parse_init(args.init, program.pvars)
    pv0 = tuple(init[x] for x in program.pvars)

    estimates = estimate_tail(loop, pv0, args.ks, args.trials, args.seed)
    frame = estimates_to_frame(estimates)
    if args.exact:
        try:
            tails = exact_tail(loop, pv0, max(args.ks))
            frame["exact"] = [float(tails[k - 1]) for k in args.ks]
        except (InfiniteSupport, StateExplosion) as exc:
            logger.warning(f"[astprove:cli] Exact tail unavailable: {exc}")
    if args.out:
        frame.to_csv(args.out, index=False)
        print(f"[astprove] Estimates written to {args.out}")
    else:
        print(frame.to_string(index=False))
    return 0


def cmd_bound(args):
    kind = BoundKind.DIFF_BOUNDED if args.kind == "diff" else BoundKind.GENERAL
    zeta = Fraction(args.zeta) if args.zeta is not None else None
    inp = BoundInput(Fraction(args.e_x0), Fraction(args.delta), zeta, kind)
    frame = series_to_frame(bound_series(inp, args.ks))
    if args.out:
        frame.to_csv(args.out, index=False)
        print(f"[astprove] Bounds written to {args.out}")
    else:
        print(frame.to_string(index=False, float_format=lambda v: f"{v:.15g}"))
    return 0


def cmd_parse(args):
    program = _load_program(args)
    norm = normalize(program)
    sys.stdout.write(pretty_print(program))
    print(f"# {len(norm.components)} components, {len(norm.loops)} loops")
    for loop in norm.loops:
        shape = "incremental" if loop.is_incremental else "non-incremental"
        guard = "affine" if loop.guard_is_affine else "quadratic"
        print(f"# loop #{loop.loop_id}: {shape} body, {guard} guard")
    return 0


# ─────────────────────────────────────────────────────────────
# Argument parsing
# ─────────────────────────────────────────────────────────────

def _add_source(parser, loop_index=False):
    parser.add_argument("file", nargs="?", help="Path to a .pwhile program")
    parser.add_argument("--example", choices=catalog.names(), help="Use a built-in example instead of a file")
    if loop_index:
        parser.add_argument("--loop", type=int, default=0, help="Index of the loop to use (default: 0)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="astprove",
        description="astprove - almost-sure termination certificates for probabilistic while-programs",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=textwrap.dedent("""\
            Examples:
              astprove analyze --example symmetric_walk --init x=1
              astprove check walk.pwhile --cert cert.json
              astprove simulate walk.pwhile --init x=1 --ks 10,100 --trials 100000
              astprove bound --e-x0 2 --delta 1 --zeta 1 --kind diff --ks 100
              astprove parse --example parabola_walk
        """)
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parser.add_argument("--precision", type=int, help="Decimal digits for transcendental terms")
    parser.add_argument("--workers", type=int, help="Simulation worker threads")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # 1. astprove analyze
    analyze = subparsers.add_parser(
        "analyze",
        help="Certify every loop, compute tail bounds and compare with simulation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=textwrap.dedent("""\
            Exit codes:
              0  every loop certified symbolically
              2  some loop certified on a box only
              3  some loop without a certificate
              1  error
        """)
    )
    _add_source(analyze)
    analyze.add_argument("--init", help="Initial valuation, e.g. x=1,y=0 (unset variables are 0)")
    analyze.add_argument("--ks", type=_ks, default=list(DEFAULT_KS), help="Comma-separated k values")
    analyze.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo trials (0 to skip)")
    analyze.add_argument("--seed", type=int, default=0, help="Random seed")
    analyze.add_argument("--box", help="Box for out-of-scope checks: lo..hi or x=lo..hi,y=lo..hi")
    analyze.add_argument("--cert", help="Certificate file to try before synthesis")
    analyze.add_argument("--out", help="Write the JSON report here (and a CSV next to it)")
    analyze.set_defaults(handler=cmd_analyze)

    # 2. astprove check
    check = subparsers.add_parser(
        "check",
        help="Check a certificate file against a loop",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=textwrap.dedent("""\
            Exit codes:
              0  certified (or certified-on-box)
              4  refuted, witness printed
              5  inconclusive
              1  error
        """)
    )
    _add_source(check, loop_index=True)
    check.add_argument("--cert", required=True, help="Certificate JSON file")
    check.add_argument("--box", help="Box for bounded checking: lo..hi or x=lo..hi,y=lo..hi")
    check.add_argument("--bounded", action="store_true", help="Check on the box even when symbolic checking applies")
    check.set_defaults(handler=cmd_check)

    # 3. astprove simulate
    simulate = subparsers.add_parser("simulate", help="Estimate P(T >= k) by Monte Carlo")
    _add_source(simulate, loop_index=True)
    simulate.add_argument("--init", help="Initial valuation, e.g. x=1")
    simulate.add_argument("--ks", type=_ks, default=list(DEFAULT_KS), help="Comma-separated k values")
    simulate.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Number of trials")
    simulate.add_argument("--seed", type=int, default=0, help="Random seed")
    simulate.add_argument("--exact", action="store_true", help="Add the exact DP tail when support is finite")
    simulate.add_argument("--out", help="Write estimates as CSV")
    simulate.set_defaults(handler=cmd_simulate)

    # 4. astprove bound
    bound = subparsers.add_parser("bound", help="Evaluate the explicit tail bounds")
    bound.add_argument("--e-x0", required=True, help="h(in, pv0), a positive rational")
    bound.add_argument("--delta", default="1", help="Lower bound on E|g| (default 1)")
    bound.add_argument("--zeta", help="Difference bound (required for --kind diff)")
    bound.add_argument("--kind", choices=["diff", "general"], default="diff")
    bound.add_argument("--ks", type=_ks, required=True, help="Comma-separated k values")
    bound.add_argument("--out", help="Write the series as CSV")
    bound.set_defaults(handler=cmd_bound)

    # 5. astprove parse
    parse_cmd = subparsers.add_parser("parse", help="Pretty-print and normalize a program")
    _add_source(parse_cmd)
    parse_cmd.set_defaults(handler=cmd_parse)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with precision_scope(args.precision), workers_scope(args.workers):
            return args.handler(args)
    except (AstproveError, ValueError, KeyError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1
    finally:
        shutdown_executors()


if __name__ == "__main__":
    sys.exit(main())
