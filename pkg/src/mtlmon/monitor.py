"""Online monitor with memory independent of the trace length.

The pipeline: separate the formula into an untimed backbone over bounded
timed atoms, compile the backbone into its two certificate acceptors, and
evaluate the atoms incrementally inside a fixed-capacity sliding window.
Each event appends one column; each atom subformula owns a row whose cells
are filled exactly once, as soon as the events that can influence them have
all arrived (the row's horizon).  When every atom root is filled at a
position, that position's letter is emitted to the acceptors, and a
certificate acceptance latches the verdict.

Capacity is fixed up front from the variability bound and the atom
horizons: at most k_var events fit in any half-open unit-length time span,
so the unresolved tail holds at most k_var * ceil(max row horizon) columns,
the resolved span kept for bounded-past rereads at most k_var * ceil(max
past window) columns, plus one boundary column.  Eviction only drops
columns below every row's reread floor, and an occupancy assertion guards
the bound.

`finish` answers what the verdict would be if the stream ended now.  It is
pure: pending positions are resolved against the received trace under the
pessimistic and optimistic readings at once (pair letters), and the
acceptor states advance on copies.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .formulas import (
    And, Atom, FalseF, Formula, GSince, GUntil, Historically, Not, Or, Since,
    TrueF, Until, desugar,
)
from .intervals import FULL, Interval
from .oracle import Verdict
from .prefix_dfa import DEFAULT_STATE_BUDGET, BackboneLetter, build
from .rewriting import DEFAULT_NODE_BUDGET, separate
from .traces import Event, TimedWord


class MonitorError(ValueError):
    """Input contract violation: bad timestamps or variability exceeded."""


@dataclass(frozen=True)
class MonitorConfig:
    formula: Formula
    k_var: int
    rewrite_budget: int = DEFAULT_NODE_BUDGET
    state_budget: int = DEFAULT_STATE_BUDGET

    def __post_init__(self):
        if self.k_var < 1:
            raise ValueError(f"k_var must be at least 1, got {self.k_var}")


# row kinds
(_PRED, _CONST_T, _CONST_F, _NOT, _AND, _OR,
 _UNT, _SIN, _GUNT, _GSIN, _SIN_FULL, _HIS_FULL) = range(12)

_STRONG, _NEUTRAL, _WEAK = 1, 0, -1


@dataclass
class _Row:
    kind: int
    a: int = -1                  # first child row
    b: int = -1                  # second child row
    ivl: Interval | None = None
    c: Fraction | None = None
    pred: str | None = None
    horizon: Fraction = Fraction(0)   # fill row at j once t_last >= tau_j + horizon
    # pointer state, all monotonically non-decreasing:
    #   t_max  newest timestamp that has triggered fills
    #   j1     fill frontier (next position to fill)
    #   j2     ingest position for the hold-violation queue
    #   j3     violation watermark: last violation position (bounded since)
    #          or consumed prefix of the violation-time list (generalized)
    #   j4     reread floor: oldest column this row may still read
    #   j5     ingest position for the witness queue
    t_max: Fraction = Fraction(-1)
    j1: int = 0
    j2: int = 0
    j3: int = -1
    j4: int = 0
    j5: int = 0
    wq: deque = field(default_factory=deque)   # (position, time) with witness arg true
    vq: deque = field(default_factory=deque)   # positions with hold arg false
    vt: list = field(default_factory=list)     # violation times (generalized kinds)


class WindowBuffer:
    """Ring of per-event columns with a fixed capacity.

    Each column holds the event data and one write-once cell per row.
    Columns are addressed by absolute position; eviction drops a prefix.
    """

    def __init__(self, capacity: int, n_rows: int):
        self.capacity = capacity
        self.n_rows = n_rows
        self.base = 0                  # absolute position of columns[0]
        self.times: deque[Fraction] = deque()
        self.preds: deque[frozenset] = deque()
        self.cells: list[deque] = [deque() for _ in range(n_rows)]
        self.peak = 0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def end(self) -> int:
        """One past the newest absolute position."""
        return self.base + len(self.times)

    def append(self, time: Fraction, preds: frozenset):
        self.times.append(time)
        self.preds.append(preds)
        for row in self.cells:
            row.append(None)
        self.peak = max(self.peak, len(self.times))

    def tau(self, pos: int) -> Fraction:
        return self.times[pos - self.base]

    def preds_at(self, pos: int) -> frozenset:
        return self.preds[pos - self.base]

    def cell(self, row: int, pos: int):
        return self.cells[row][pos - self.base]

    def set_cell(self, row: int, pos: int, value: bool):
        idx = pos - self.base
        if self.cells[row][idx] is not None:
            raise AssertionError(f"cell ({row}, {pos}) written twice")
        self.cells[row][idx] = value

    def evict_below(self, floor: int):
        while self.base < floor and self.times:
            self.times.popleft()
            self.preds.popleft()
            for row in self.cells:
                row.popleft()
            self.base += 1


def _sup(ivl: Interval) -> Fraction:
    if not ivl.is_bounded:
        raise AssertionError("window row with an unbounded interval")
    return ivl.hi.value


def _compile_rows(atom_map: dict[str, Formula]
                  ) -> tuple[list[_Row], dict[str, int]]:
    """One row per distinct subformula across all atoms, children first."""
    index: dict[Formula, int] = {}
    rows: list[_Row] = []

    def add(g: Formula) -> int:
        got = index.get(g)
        if got is not None:
            return got
        if isinstance(g, TrueF):
            row = _Row(_CONST_T)
        elif isinstance(g, FalseF):
            row = _Row(_CONST_F)
        elif isinstance(g, Atom):
            row = _Row(_PRED, pred=g.name)
        elif isinstance(g, Not):
            a = add(g.arg)
            row = _Row(_NOT, a=a, horizon=rows[a].horizon)
        elif isinstance(g, (And, Or)):
            a, b = add(g.left), add(g.right)
            row = _Row(_AND if isinstance(g, And) else _OR, a=a, b=b,
                       horizon=max(rows[a].horizon, rows[b].horizon))
        elif isinstance(g, Until):
            a, b = add(g.left), add(g.right)
            h = _sup(g.ivl) + max(Fraction(0), rows[a].horizon, rows[b].horizon)
            row = _Row(_UNT, a=a, b=b, ivl=g.ivl, horizon=h)
        elif isinstance(g, GUntil):
            a, b = add(g.left), add(g.right)
            width = g.ivl.width().value
            h = max(_sup(g.ivl) + max(Fraction(0), rows[b].horizon),
                    g.c + width + max(Fraction(0), rows[a].horizon))
            row = _Row(_GUNT, a=a, b=b, ivl=g.ivl, c=g.c, horizon=h)
        elif isinstance(g, Since) and g.ivl == FULL:
            a, b = add(g.left), add(g.right)
            row = _Row(_SIN_FULL, a=a, b=b,
                       horizon=max(Fraction(0), rows[a].horizon, rows[b].horizon))
        elif isinstance(g, Historically) and g.ivl == FULL:
            a = add(g.arg)
            row = _Row(_HIS_FULL, a=a, horizon=max(Fraction(0), rows[a].horizon))
        elif isinstance(g, Since):
            a, b = add(g.left), add(g.right)
            h = max(Fraction(0), rows[a].horizon,
                    rows[b].horizon - g.ivl.lo)
            row = _Row(_SIN, a=a, b=b, ivl=g.ivl, horizon=h)
        elif isinstance(g, GSince):
            a, b = add(g.left), add(g.right)
            h = max(Fraction(0), rows[a].horizon - g.c,
                    rows[b].horizon - g.ivl.lo)
            row = _Row(_GSIN, a=a, b=b, ivl=g.ivl, c=g.c, horizon=h)
        else:
            raise AssertionError(f"atom kept a non-window node: {g!r}")
        index[g] = len(rows)
        rows.append(row)
        return index[g]

    roots = {name: add(g) for name, g in atom_map.items()}
    return rows, roots


def _below_inf(ivl: Interval, dt: Fraction) -> bool:
    """dt falls at or under the interval's open lower edge."""
    return dt < ivl.lo or (dt == ivl.lo and ivl.lo_open)


class Monitor:
    """Single-owner stateful monitor; feed events in timestamp order."""

    def __init__(self, config: MonitorConfig):
        self.config = config
        core = desugar(config.formula)
        self.separated, self.rewrite_log = separate(core, config.rewrite_budget)
        self.good, self.bad, self.registry = build(
            self.separated.backbone, config.state_budget)
        self.alphabet = self.registry.base_alphabet
        self.rows, self._atom_root = _compile_rows(self.separated.atom_map)

        fr_win = max((r.horizon for r in self.rows), default=Fraction(0))
        fr_win = max(fr_win, Fraction(0))
        pr_win = max((_sup(r.ivl) for r in self.rows
                      if r.kind in (_SIN, _GSIN)), default=Fraction(0))
        self.fr_max = max(
            (self.rows[rid].horizon for rid in self._atom_root.values()),
            default=Fraction(0))
        self.fr_max = max(self.fr_max, Fraction(0))
        k = config.k_var
        self.l_fr = k * math.ceil(fr_win)
        self.l_pr = k * math.ceil(pr_win)
        self.window = WindowBuffer(self.l_pr + 1 + self.l_fr, len(self.rows))

        self.reg_state = self.registry.initial_state()
        self.good_state = self.good.initial
        self.bad_state = self.bad.initial
        self.verdict = Verdict.UNKNOWN
        self.emitted = 0               # positions whose letter has been sent
        self.events = 0
        self._recent = deque(maxlen=config.k_var + 1)
        self._last_time = Fraction(-1)

    # -- feeding ------------------------------------------------------------

    def feed(self, event: Event) -> Verdict:
        """Consume one event; returns the latched verdict."""
        t = event.time
        if self.events == 0:
            if t != 0:
                raise MonitorError(f"first timestamp must be 0, got {t}")
        elif t <= self._last_time:
            raise MonitorError(
                f"timestamps must strictly increase: got {t} after "
                f"{self._last_time}")
        self._recent.append(t)
        if len(self._recent) == self.config.k_var + 1 \
                and t - self._recent[0] < 1:
            raise MonitorError(
                f"variability bound exceeded: {self.config.k_var + 1} events "
                f"inside a unit time span ending at {t}")
        self._last_time = t
        self.events += 1
        if self.verdict is not Verdict.UNKNOWN:
            return self.verdict

        self.window.append(t, event.preds)
        self._advance_rows(t)
        self._emit_resolved()
        self._evict()
        return self.verdict

    @property
    def window_occupancy(self) -> int:
        return len(self.window)

    # -- row filling --------------------------------------------------------

    def _advance_rows(self, t_last: Fraction):
        win = self.window
        end = win.end
        for rid, row in enumerate(self.rows):
            if row.t_max < t_last:
                row.t_max = t_last
            if row.kind in (_UNT, _GUNT, _SIN, _GSIN):
                self._ingest(rid, row, end)
            while row.j1 < end and t_last >= win.tau(row.j1) + row.horizon:
                self._fill(rid, row, row.j1)
                row.j1 += 1

    def _ingest(self, rid: int, row: _Row, end: int):
        win = self.window
        va, vb = row.a, row.b
        while row.j2 < end and win.cell(va, row.j2) is not None:
            if not win.cell(va, row.j2):
                if row.kind in (_UNT, _SIN):
                    row.vq.append(row.j2)
                else:
                    row.vt.append(win.tau(row.j2))
            row.j2 += 1
        while row.j5 < end and win.cell(vb, row.j5) is not None:
            if win.cell(vb, row.j5):
                row.wq.append((row.j5, win.tau(row.j5)))
            row.j5 += 1

    def _fill(self, rid: int, row: _Row, j: int):
        win = self.window
        kind = row.kind
        if kind == _PRED:
            value = row.pred in win.preds_at(j)
        elif kind == _CONST_T:
            value = True
        elif kind == _CONST_F:
            value = False
        elif kind == _NOT:
            value = not win.cell(row.a, j)
        elif kind == _AND:
            value = win.cell(row.a, j) and win.cell(row.b, j)
        elif kind == _OR:
            value = win.cell(row.a, j) or win.cell(row.b, j)
        elif kind == _SIN_FULL:
            if j == 0:
                value = False
            else:
                value = win.cell(row.b, j - 1) or (
                    win.cell(row.a, j - 1) and win.cell(rid, j - 1))
        elif kind == _HIS_FULL:
            if j == 0:
                value = True
            else:
                value = win.cell(row.a, j - 1) and win.cell(rid, j - 1)
        elif kind == _UNT:
            value = self._fill_until(row, j)
        elif kind == _GUNT:
            value = self._fill_guntil(row, j)
        elif kind == _SIN:
            value = self._fill_since(row, j)
        else:
            value = self._fill_gsince(row, j)
        win.set_cell(rid, j, value)

    def _fill_until(self, row: _Row, j: int) -> bool:
        win = self.window
        ivl = row.ivl
        tj = win.tau(j)
        vq, wq = row.vq, row.wq
        while vq and vq[0] <= j:
            vq.popleft()
        firstviol = vq[0] if vq else None
        while wq and (wq[0][0] <= j or _below_inf(ivl, wq[0][1] - tj)):
            wq.popleft()
        for k, tk in wq:
            dt = tk - tj
            if not ivl.below_sup(dt):
                break
            if not ivl.contains(dt):
                continue
            return firstviol is None or k <= firstviol
        return False

    def _fill_guntil(self, row: _Row, j: int) -> bool:
        win = self.window
        ivl, c = row.ivl, row.c
        a = ivl.lo
        tj = win.tau(j)
        vt, wq = row.vt, row.wq
        # hold violations at or before tj + c never matter again: zone lower
        # edges only move right as j advances
        j3 = row.j3 if row.j3 > 0 else 0
        while j3 < len(vt) and vt[j3] <= tj + c:
            j3 += 1
        if j3 > 64 and j3 * 2 > len(vt):
            del vt[:j3]
            j3 = 0
        row.j3 = j3
        while wq and (wq[0][0] <= j or _below_inf(ivl, wq[0][1] - tj)):
            wq.popleft()
        for k, tk in wq:
            dt = tk - tj
            if not ivl.below_sup(dt):
                break
            if not ivl.contains(dt):
                continue
            lo_t = tj + c
            hi_t = tk - (a - c)
            i1 = bisect_right(vt, lo_t, lo=j3)
            i2 = bisect_left(vt, hi_t, lo=j3)
            if i1 >= i2:
                return True
        return False

    def _fill_since(self, row: _Row, j: int) -> bool:
        win = self.window
        ivl = row.ivl
        sup = _sup(ivl)
        tj = win.tau(j)
        wq = row.wq
        # j3 tracks the newest hold violation strictly below the fill position
        while row.vq and row.vq[0] < j:
            row.j3 = row.vq.popleft()
        # witnesses past the window or older than the violation watermark can
        # never serve this or any later position
        while wq and (wq[0][1] < tj - sup or wq[0][0] < row.j3):
            wq.popleft()
        for k, tk in wq:
            if k >= j:
                break
            dt = tj - tk
            if _below_inf(ivl, dt):
                break
            if ivl.contains(dt) and k >= row.j3:
                return True
        return False

    def _fill_gsince(self, row: _Row, j: int) -> bool:
        win = self.window
        ivl, c = row.ivl, row.c
        a = ivl.lo
        sup = _sup(ivl)
        tj = win.tau(j)
        vt, wq = row.vt, row.wq
        j3 = row.j3 if row.j3 > 0 else 0
        while j3 < len(vt) and vt[j3] <= tj - sup + (a - c):
            j3 += 1
        if j3 > 64 and j3 * 2 > len(vt):
            del vt[:j3]
            j3 = 0
        row.j3 = j3
        while wq and wq[0][1] < tj - sup:
            wq.popleft()
        for k, tk in wq:
            if k >= j:
                break
            dt = tj - tk
            if _below_inf(ivl, dt):
                break
            if not ivl.contains(dt):
                continue
            lo_t = tk + (a - c)
            hi_t = tj - c
            i1 = bisect_right(vt, lo_t, lo=j3)
            i2 = bisect_left(vt, hi_t, lo=j3)
            if i1 >= i2:
                return True
        return False

    # -- letters and verdicts -----------------------------------------------

    def _letter_at(self, pos: int) -> BackboneLetter:
        win = self.window
        strong = weak = 0
        for i, name in enumerate(self.alphabet):
            root = self._atom_root.get(name)
            if root is None:
                v = name in win.preds_at(pos)
            else:
                v = win.cell(root, pos)
            strong |= bool(v) << i
            weak |= bool(v) << i
        return BackboneLetter(strong, weak)

    def _emit_resolved(self):
        win = self.window
        while self.emitted < win.end and all(
                win.cell(rid, self.emitted) is not None
                for rid in self._atom_root.values()):
            letter = self._letter_at(self.emitted)
            self.reg_state, ext = self.registry.step(self.reg_state, letter)
            self.good_state = self.good.step(self.good_state, ext)
            self.bad_state = self.bad.step(self.bad_state, ext)
            self.emitted += 1
            g = self.good.is_accepting(self.good_state)
            b = self.bad.is_accepting(self.bad_state)
            if g and b:
                raise AssertionError("both certificate acceptors accepted")
            if g:
                self.verdict = Verdict.GOOD
                return
            if b:
                self.verdict = Verdict.BAD
                return

    def _evict(self):
        win = self.window
        floor = self.emitted
        for rid, row in enumerate(self.rows):
            kind = row.kind
            if kind in (_SIN_FULL, _HIS_FULL):
                need = row.j1 - 1
            elif kind in (_SIN, _GSIN):
                anchor = min(row.j1, win.end - 1)
                limit = win.tau(anchor) - _sup(row.ivl)
                j4 = max(row.j4, win.base)
                while j4 < win.end and win.tau(j4) < limit:
                    j4 += 1
                row.j4 = j4
                need = j4
            else:
                need = row.j1
            if need < floor:
                floor = need
        win.evict_below(max(floor, win.base))
        if len(win) > win.capacity:
            raise AssertionError(
                f"window occupancy {len(win)} exceeds capacity {win.capacity}")

    # -- end of stream ------------------------------------------------------

    def finish(self) -> Verdict:
        """Verdict if the stream ended now; does not change monitor state."""
        if self.verdict is not Verdict.UNKNOWN:
            return self.verdict
        if self.events == 0:
            return Verdict.UNKNOWN
        win = self.window
        memo: dict[tuple[int, int, int], bool] = {}
        t_last = self._last_time

        def ev(rel: int, rid: int, j: int) -> bool:
            # a written cell is stable and relation-independent: the row's
            # horizon has passed, so the three relations coincide there
            cached = win.cell(rid, j)
            if cached is not None:
                return cached
            key = (rel, rid, j)
            got = memo.get(key)
            if got is None:
                got = memo[key] = compute(rel, rid, j)
            return got

        def compute(rel: int, rid: int, j: int) -> bool:
            row = self.rows[rid]
            kind = row.kind
            if kind == _PRED:
                return row.pred in win.preds_at(j)
            if kind == _CONST_T:
                return True
            if kind == _CONST_F:
                return False
            if kind == _NOT:
                return not ev(-rel, row.a, j)
            if kind == _AND:
                return ev(rel, row.a, j) and ev(rel, row.b, j)
            if kind == _OR:
                return ev(rel, row.a, j) or ev(rel, row.b, j)
            if kind == _SIN_FULL:
                if j == 0:
                    return False
                return ev(rel, row.b, j - 1) or (
                    ev(rel, row.a, j - 1) and ev(rel, rid, j - 1))
            if kind == _HIS_FULL:
                if j == 0:
                    return True
                return ev(rel, row.a, j - 1) and ev(rel, rid, j - 1)
            ivl = row.ivl
            tj = win.tau(j)
            end = win.end
            if kind == _UNT:
                for k in range(j + 1, end):
                    dt = win.tau(k) - tj
                    if not ivl.below_sup(dt):
                        break
                    if ivl.contains(dt) and ev(rel, row.b, k) and all(
                            ev(rel, row.a, m) for m in range(j + 1, k)):
                        return True
                if rel == _WEAK:
                    return (ivl.hi > t_last - tj
                            and all(ev(rel, row.a, m)
                                    for m in range(j + 1, end)))
                return False
            if kind == _GUNT:
                a, c = ivl.lo, row.c
                for k in range(j + 1, end):
                    dt = win.tau(k) - tj
                    if not ivl.below_sup(dt):
                        break
                    if ivl.contains(dt) and ev(rel, row.b, k) and all(
                            ev(rel, row.a, m) for m in range(j + 1, k)
                            if win.tau(m) - tj > c
                            and win.tau(k) - win.tau(m) > a - c):
                        return True
                if rel == _WEAK:
                    return (ivl.hi > t_last - tj
                            and all(ev(rel, row.a, m)
                                    for m in range(j + 1, end)
                                    if win.tau(m) - tj > c
                                    and t_last - win.tau(m) >= a - c))
                return False
            if kind == _SIN:
                for k in range(j - 1, win.base - 1, -1):
                    dt = tj - win.tau(k)
                    if not ivl.below_sup(dt):
                        break
                    if ivl.contains(dt) and ev(rel, row.b, k) and all(
                            ev(rel, row.a, m) for m in range(k + 1, j)):
                        return True
                return False
            a, c = ivl.lo, row.c
            for k in range(j - 1, win.base - 1, -1):
                dt = tj - win.tau(k)
                if not ivl.below_sup(dt):
                    break
                if ivl.contains(dt) and ev(rel, row.b, k) and all(
                        ev(rel, row.a, m) for m in range(k + 1, j)
                        if tj - win.tau(m) > c
                        and win.tau(m) - win.tau(k) > a - c):
                    return True
            return False

        reg_state = self.reg_state
        good_state = self.good_state
        bad_state = self.bad_state
        for pos in range(self.emitted, win.end):
            strong = weak = 0
            for i, name in enumerate(self.alphabet):
                root = self._atom_root.get(name)
                if root is None:
                    s = w = name in win.preds_at(pos)
                else:
                    s = ev(_STRONG, root, pos)
                    w = ev(_WEAK, root, pos)
                strong |= bool(s) << i
                weak |= bool(w) << i
            reg_state, ext = self.registry.step(
                reg_state, BackboneLetter(strong, weak))
            good_state = self.good.step(good_state, ext)
            bad_state = self.bad.step(bad_state, ext)
            g = self.good.is_accepting(good_state)
            b = self.bad.is_accepting(bad_state)
            if g and b:
                raise AssertionError("both certificate acceptors accepted")
            if g:
                return Verdict.GOOD
            if b:
                return Verdict.BAD
        return Verdict.UNKNOWN


def run_offline(formula: Formula, trace: TimedWord, k_var: int,
                ) -> tuple[list[Verdict], Verdict]:
    """Feed a whole timed word; per-event verdicts plus the finish verdict."""
    mon = Monitor(MonitorConfig(formula=formula, k_var=k_var))
    out = [mon.feed(e) for e in trace.events]
    return out, mon.finish()
