"""Command-line front-end: check, monitor, rewrite, gen, bench.

All output is line-oriented and deterministic for deterministic inputs.
Exit codes: 0 success (for `monitor`, Unknown at end of input), 10/20 an
informative good/bad prefix was detected, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .formulas import desugar, size
from .monitor import Monitor, MonitorConfig, MonitorError
from .oracle import Rel, Verdict, evaluate
from .parser import ParseError, parse, to_text
from .prefix_dfa import StateBudgetError, build
from .rewriting import (
    RewriteBudgetError, SeparationError, resugar, separate,
)
from .tablecheck import check
from .traces import (
    TraceError, _event_from_json, decimal_str, generate, parse_trace,
    serialize,
)

_EXIT_GOOD = 10
_EXIT_BAD = 20
_EXIT_USAGE = 2


class _CliError(Exception):
    """Input problem already described by its message."""


def _read_trace(path: str, normalize: bool):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_trace(fh, normalize=normalize)
    except OSError as exc:
        raise _CliError(f"cannot read trace {path}: {exc}") from None


def _parse_formula(text: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise _CliError(f"bad formula: {exc}") from None


def _cmd_check(args) -> int:
    f = _parse_formula(args.formula)
    trace = _read_trace(args.trace, args.normalize)
    table = check(trace, f)
    row = table.row(f)
    print(f"neutral: {'true' if row[0] else 'false'}")
    if args.positions:
        for i, e in enumerate(trace):
            print(f"{i} {decimal_str(e.time)} {'true' if row[i] else 'false'}")
    if args.oracle:
        for i in range(len(trace)):
            want = evaluate(Rel.NEUTRAL, trace, i, f)
            if want != row[i]:
                raise _CliError(
                    f"oracle disagrees with the table at position {i}: "
                    f"oracle {want}, table {row[i]}")
        print("oracle: agree")
    return 0


def _stream_events(args):
    """Yield events from the trace file or stdin, one JSON object per line."""
    fh = open(args.trace, encoding="utf-8") if args.trace else sys.stdin
    try:
        base = None
        lineno = 0
        for line in fh:
            lineno += 1
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {lineno}: invalid JSON: {exc}") from None
            event = _event_from_json(obj, lineno)
            if args.normalize:
                if base is None:
                    base = event.time
                event = type(event)(event.time - base, event.preds)
            yield event
    finally:
        if args.trace:
            fh.close()


def _cmd_monitor(args) -> int:
    f = _parse_formula(args.formula)
    if args.kvar < 1:
        raise _CliError(f"--kvar must be at least 1, got {args.kvar}")
    mon = Monitor(MonitorConfig(formula=f, k_var=args.kvar))
    verdict = Verdict.UNKNOWN
    for idx, event in enumerate(_stream_events(args)):
        got = mon.feed(event)
        if got is not verdict:
            verdict = got
            print(f"{idx} {decimal_str(event.time)} {verdict}", flush=True)
    if verdict is Verdict.GOOD:
        return _EXIT_GOOD
    if verdict is Verdict.BAD:
        return _EXIT_BAD
    return 0


def _cmd_rewrite(args) -> int:
    f = _parse_formula(args.formula)
    sep, log = separate(desugar(f))
    print(f"backbone: {to_text(sep.backbone)}")
    for name in sorted(sep.atom_map, key=lambda s: int(s[1:])):
        print(f"{name} = {to_text(resugar(sep.atom_map[name]))}")
    if args.trace_steps:
        for i, (rule_id, before, after) in enumerate(log.steps, start=1):
            print(f"step {i} {rule_id} {size(before)} -> {size(after)}")
    if args.emit_dfa:
        good, bad, _registry = build(sep.backbone)
        print(f"// good-prefix acceptor: {len(good.states)} states")
        print(good.to_dot())
        print(f"// bad-prefix acceptor: {len(bad.states)} states")
        print(bad.to_dot())
    return 0


def _cmd_gen(args) -> int:
    preds = [p for p in args.predicates.split(",") if p]
    if not preds:
        raise _CliError("--predicates must name at least one predicate")
    if not 0 <= args.density <= 1:
        raise _CliError(f"--density must lie in [0, 1], got {args.density}")
    try:
        trace = generate(args.seed, args.length, args.kvar, preds,
                         density=args.density)
    except ValueError as exc:
        raise _CliError(str(exc)) from None
    for line in serialize(trace):
        print(line)
    return 0


def _cmd_bench(args) -> int:
    f = _parse_formula(args.formula)
    try:
        lengths = [int(x) for x in args.lengths.split(",") if x]
    except ValueError:
        raise _CliError(f"bad --lengths {args.lengths!r}") from None
    if not lengths or any(n < 1 for n in lengths):
        raise _CliError("--lengths needs positive integers, comma-separated")
    print("length ns_per_event peak_window")
    for n in lengths:
        trace = generate(args.seed, n, args.kvar,
                         ["p", "q"], density=args.density)
        mon = Monitor(MonitorConfig(formula=f, k_var=args.kvar))
        peak = 0
        t0 = time.perf_counter_ns()
        for event in trace:
            mon.feed(event)
            occ = mon.window_occupancy
            if occ > peak:
                peak = occ
        elapsed = time.perf_counter_ns() - t0
        print(f"{n} {elapsed // n} {peak}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="mtlmon",
        description="Trace checking and online monitoring for metric "
                    "temporal logic with generalized until/since.")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="offline-check a recorded trace")
    p.add_argument("--trace", required=True, help="JSON-lines trace file")
    p.add_argument("--formula", required=True)
    p.add_argument("--positions", action="store_true",
                   help="print the verdict at every position")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check every position against the reference "
                        "evaluator")
    p.add_argument("--normalize", action="store_true",
                   help="shift timestamps so the first becomes 0")
    p.set_defaults(run=_cmd_check)

    p = sub.add_parser("monitor", help="watch a stream for informative "
                                       "good/bad prefixes")
    p.add_argument("--formula", required=True)
    p.add_argument("--kvar", type=int, required=True,
                   help="bound on events per unit time span")
    p.add_argument("--trace", help="JSON-lines trace file (default: stdin)")
    p.add_argument("--normalize", action="store_true",
                   help="shift timestamps so the first becomes 0")
    p.set_defaults(run=_cmd_monitor)

    p = sub.add_parser("rewrite", help="separate a formula into an untimed "
                                       "backbone over bounded timed atoms")
    p.add_argument("--formula", required=True)
    p.add_argument("--trace-steps", action="store_true",
                   help="print every rewrite step")
    p.add_argument("--emit-dfa", action="store_true",
                   help="print the two certificate acceptors in DOT form")
    p.set_defaults(run=_cmd_rewrite)

    p = sub.add_parser("gen", help="generate a deterministic random trace")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--kvar", type=int, required=True)
    p.add_argument("--density", type=float, default=0.5,
                   help="per-event probability of each predicate")
    p.add_argument("--predicates", default="p,q",
                   help="comma-separated predicate names")
    p.set_defaults(run=_cmd_gen)

    p = sub.add_parser("bench", help="measure per-event monitor cost over "
                                     "generated traces")
    p.add_argument("--formula", required=True)
    p.add_argument("--lengths", required=True,
                   help="comma-separated trace lengths")
    p.add_argument("--kvar", type=int, default=4)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--density", type=float, default=1.0,
                   help="per-event probability of each predicate")
    p.set_defaults(run=_cmd_bench)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (_CliError, ParseError, TraceError, MonitorError, SeparationError,
            RewriteBudgetError, StateBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
