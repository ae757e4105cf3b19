"""Reference evaluator for the three finite-trace relations.

Strong, neutral and weak satisfaction differ in two places only: negation
swaps strong and weak (neutral is self-dual), and the weak relation lets an
until succeed without a witness when the trace ends before the interval's
upper end with the hold obligation intact.  Past operators read fully
recorded history, so they never get such an escape clause.

This module is the correctness anchor: deliberately literal, quadratic per
position, memoised.  The table checker and monitor are tested against it.
"""

from __future__ import annotations

import enum
from fractions import Fraction

from .formulas import (
    And, Atom, Formula, GSince, GUntil, Not, Since, TrueF, Until, desugar,
    subformulas,
)
from .traces import TimedWord


class Rel(enum.IntEnum):
    """Satisfaction relation; negation maps a relation to its dual (-rel)."""

    STRONG = 1
    NEUTRAL = 0
    WEAK = -1


class Verdict(enum.Enum):
    UNKNOWN = "Unknown"
    GOOD = "InformativeGood"
    BAD = "InformativeBad"

    def __str__(self) -> str:
        return self.value


def evaluate(rel: Rel, trace: TimedWord, i: int, f: Formula) -> bool:
    """Does position i of the trace satisfy f under the given relation?"""
    if not 0 <= i < len(trace):
        raise IndexError(f"position {i} outside trace of length {len(trace)}")
    core = desugar(f)
    times = trace.times
    events = trace.events
    n = len(events)
    index = {g: k for k, g in enumerate(subformulas(core))}
    memo: dict[tuple[int, int, int], bool] = {}

    def ev(r: int, g: Formula, j: int) -> bool:
        key = (r, index[g], j)
        hit = memo.get(key)
        if hit is None:
            hit = memo[key] = compute(r, g, j)
        return hit

    def compute(r: int, g: Formula, i: int) -> bool:
        if isinstance(g, TrueF):
            return True
        if isinstance(g, Atom):
            return g.name in events[i].preds
        if isinstance(g, Not):
            return not ev(-r, g.arg, i)
        if isinstance(g, And):
            return ev(r, g.left, i) and ev(r, g.right, i)

        ivl = g.ivl
        if isinstance(g, Until):
            for j in range(i + 1, n):
                dt = times[j] - times[i]
                if not ivl.below_sup(dt):
                    break
                if ivl.contains(dt) and ev(r, g.right, j) and all(
                        ev(r, g.left, k) for k in range(i + 1, j)):
                    return True
            if r == Rel.WEAK:
                return (ivl.hi > times[n - 1] - times[i]
                        and all(ev(r, g.left, k) for k in range(i + 1, n)))
            return False
        if isinstance(g, Since):
            for j in range(i - 1, -1, -1):
                dt = times[i] - times[j]
                if not ivl.below_sup(dt):
                    break
                if ivl.contains(dt) and ev(r, g.right, j) and all(
                        ev(r, g.left, k) for k in range(j + 1, i)):
                    return True
            return False
        if isinstance(g, GUntil):
            a, c = ivl.lo, g.c
            for j in range(i + 1, n):
                dt = times[j] - times[i]
                if not ivl.below_sup(dt):
                    break
                if ivl.contains(dt) and ev(r, g.right, j) and all(
                        ev(r, g.left, k) for k in range(i + 1, j)
                        if times[k] - times[i] > c and times[j] - times[k] > a - c):
                    return True
            if r == Rel.WEAK:
                return (ivl.hi > times[n - 1] - times[i]
                        and all(ev(r, g.left, k) for k in range(i + 1, n)
                                if times[k] - times[i] > c
                                and times[n - 1] - times[k] >= a - c))
            return False
        if isinstance(g, GSince):
            a, c = ivl.lo, g.c
            for j in range(i - 1, -1, -1):
                dt = times[i] - times[j]
                if not ivl.below_sup(dt):
                    break
                if ivl.contains(dt) and ev(r, g.right, j) and all(
                        ev(r, g.left, k) for k in range(j + 1, i)
                        if times[i] - times[k] > c and times[k] - times[j] > a - c):
                    return True
            return False
        raise TypeError(f"evaluate expects core nodes, got {type(g).__name__}")

    return ev(int(rel), core, i)


def classify_prefix(trace: TimedWord, f: Formula) -> Verdict:
    """Informative-prefix classification of the whole trace at position 0."""
    if evaluate(Rel.STRONG, trace, 0, f):
        return Verdict.GOOD
    if not evaluate(Rel.WEAK, trace, 0, f):
        return Verdict.BAD
    return Verdict.UNKNOWN
