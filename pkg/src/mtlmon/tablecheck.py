"""Offline trace checking: one boolean row per distinct subformula.

Each temporal row is filled by a two-pointer sweep over the trace, so the
whole table costs O(|trace| * subformulas).  Until rows sweep backward from
the newest event, since rows forward from the oldest; generalized variants
carry a second pointer tracking the newest (oldest) position that could
still block the hold obligation.  Rows hold neutral truth values.

Every cell is written exactly once; with audit enabled the fills assert
that, and completion always checks that no cell was left unwritten.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formulas import (
    And, Atom, Formula, GSince, GUntil, Not, Since, TrueF, Until, desugar,
    subformulas,
)
from .intervals import Interval
from .traces import TimedWord


class TableAuditError(AssertionError):
    """A fill wrote a cell twice or left one empty."""


def _store(row: list, p: int, value: bool, audit: bool):
    if audit and row[p] is not None:
        raise TableAuditError(f"cell {p} written twice")
    row[p] = value


def fill_until(times, ivl: Interval, left, right, row, audit: bool = True):
    n = len(times)
    ptr = n - 1
    for j in range(n - 1, -1, -1):
        if ptr == j:
            _store(row, ptr, False, audit)
            ptr -= 1
        if right[j]:
            if ptr == j - 1 and ptr >= 0:
                _store(row, ptr, ivl.contains(times[j] - times[ptr]), audit)
                ptr -= 1
            while ptr >= 0 and left[ptr + 1] and ivl.below_sup(times[j] - times[ptr]):
                _store(row, ptr, ivl.contains(times[j] - times[ptr]), audit)
                ptr -= 1


def fill_since(times, ivl: Interval, left, right, row, audit: bool = True):
    n = len(times)
    ptr = 0
    for j in range(n):
        if ptr == j:
            _store(row, ptr, False, audit)
            ptr += 1
        if right[j]:
            if ptr == j + 1 and ptr < n:
                _store(row, ptr, ivl.contains(times[ptr] - times[j]), audit)
                ptr += 1
            while ptr < n and left[ptr - 1] and ivl.below_sup(times[ptr] - times[j]):
                _store(row, ptr, ivl.contains(times[ptr] - times[j]), audit)
                ptr += 1


def fill_guntil(times, ivl: Interval, c, left, right, row, audit: bool = True):
    n = len(times)
    margin = ivl.lo - c  # blockers matter only strictly deeper than this
    ptr1 = n - 1
    ptr2 = n - 1
    for j in range(n - 1, -1, -1):
        if ptr1 == j:
            _store(row, ptr1, False, audit)
            ptr1 -= 1
        if right[j]:
            while ptr2 >= 0 and (times[j] - times[ptr2] <= margin or left[ptr2]):
                ptr2 -= 1
            if ptr1 == j - 1 and ptr1 >= 0:
                _store(row, ptr1, ivl.contains(times[j] - times[ptr1]), audit)
                ptr1 -= 1
            while (ptr1 >= 0 and ivl.below_sup(times[j] - times[ptr1])
                   and (ptr2 < 0 or times[ptr2] - times[ptr1] <= c)):
                _store(row, ptr1, ivl.contains(times[j] - times[ptr1]), audit)
                ptr1 -= 1


def fill_gsince(times, ivl: Interval, c, left, right, row, audit: bool = True):
    n = len(times)
    margin = ivl.lo - c
    ptr1 = 0
    ptr2 = 0
    for j in range(n):
        if ptr1 == j:
            _store(row, ptr1, False, audit)
            ptr1 += 1
        if right[j]:
            while ptr2 < n and (times[ptr2] - times[j] <= margin or left[ptr2]):
                ptr2 += 1
            if ptr1 == j + 1 and ptr1 < n:
                _store(row, ptr1, ivl.contains(times[ptr1] - times[j]), audit)
                ptr1 += 1
            while (ptr1 < n and ivl.below_sup(times[ptr1] - times[j])
                   and (ptr2 >= n or times[ptr1] - times[ptr2] <= c)):
                _store(row, ptr1, ivl.contains(times[ptr1] - times[j]), audit)
                ptr1 += 1


@dataclass
class TruthTable:
    trace: TimedWord
    formula: Formula
    core: Formula
    rows: dict[Formula, list[bool]] = field(default_factory=dict)

    def row(self, f: Formula) -> list[bool]:
        return self.rows[desugar(f)]

    def value(self, f: Formula, i: int = 0) -> bool:
        return self.row(f)[i]


def check(trace: TimedWord, f: Formula, audit: bool = True) -> TruthTable:
    """Fill the neutral-truth table for every distinct subformula."""
    core = desugar(f)
    times = trace.times
    n = len(trace)
    table = TruthTable(trace, f, core)
    rows = table.rows
    for g in subformulas(core):
        if isinstance(g, TrueF):
            rows[g] = [True] * n
        elif isinstance(g, Atom):
            rows[g] = [g.name in e.preds for e in trace]
        elif isinstance(g, Not):
            rows[g] = [not v for v in rows[g.arg]]
        elif isinstance(g, And):
            right = rows[g.right]
            rows[g] = [v and right[k] for k, v in enumerate(rows[g.left])]
        else:
            row: list = [None] * n
            if isinstance(g, Until):
                fill_until(times, g.ivl, rows[g.left], rows[g.right], row, audit)
            elif isinstance(g, Since):
                fill_since(times, g.ivl, rows[g.left], rows[g.right], row, audit)
            elif isinstance(g, GUntil):
                fill_guntil(times, g.ivl, g.c, rows[g.left], rows[g.right], row, audit)
            elif isinstance(g, GSince):
                fill_gsince(times, g.ivl, g.c, rows[g.left], rows[g.right], row, audit)
            else:
                raise TypeError(f"unexpected node {type(g).__name__}")
            if any(v is None for v in row):
                raise TableAuditError(
                    f"row for {type(g).__name__} left cells unwritten")
            rows[g] = row
    return table
