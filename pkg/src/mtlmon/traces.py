"""Timed words: the trace data model, JSON-lines I/O, variability, generation.

A timed word is a nonempty sequence of events, each a set of predicate names
stamped with a rational time; the first stamp is 0 and stamps strictly
increase.  The trace file format is one JSON object per line:

    {"t": "3/2", "p": ["Brake", "Throttle"]}

with timestamps as strings ("num/den" or decimal) or plain integers.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .intervals import rat


@dataclass(frozen=True)
class Event:
    time: Fraction
    preds: frozenset[str]


class TraceError(ValueError):
    """Malformed trace input."""


@dataclass(frozen=True)
class TimedWord:
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise TraceError("a timed word must contain at least one event")
        if self.events[0].time != 0:
            raise TraceError(
                f"first timestamp must be 0, got {self.events[0].time}")
        for k in range(1, len(self.events)):
            if self.events[k].time <= self.events[k - 1].time:
                raise TraceError(
                    f"timestamps must strictly increase: "
                    f"event {k} has {self.events[k].time} after {self.events[k - 1].time}")

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, i: int) -> Event:
        return self.events[i]

    def __iter__(self):
        return iter(self.events)

    @property
    def times(self) -> tuple[Fraction, ...]:
        return tuple(e.time for e in self.events)


def word(pairs: Iterable[tuple] ) -> TimedWord:
    """Convenience builder from (time, predicates) pairs."""
    return TimedWord(tuple(
        Event(rat(t), frozenset(ps)) for t, ps in pairs))


def _event_from_json(obj, lineno: int) -> Event:
    if not isinstance(obj, dict) or "t" not in obj or "p" not in obj:
        raise TraceError(
            f'line {lineno}: expected an object with "t" and "p" fields')
    t = obj["t"]
    if isinstance(t, bool) or not isinstance(t, (str, int)):
        raise TraceError(
            f'line {lineno}: timestamp must be a string rational or an integer')
    try:
        time = rat(t)
    except ValueError as exc:
        raise TraceError(f"line {lineno}: {exc}") from None
    preds = obj["p"]
    if not isinstance(preds, list) or any(not isinstance(p, str) for p in preds):
        raise TraceError(f'line {lineno}: "p" must be a list of predicate names')
    return Event(time, frozenset(preds))


def parse_trace(lines: Iterable[str] | str, normalize: bool = False) -> TimedWord:
    """Read a JSON-lines trace.  With normalize=True, shift times so the
    first becomes 0 (otherwise a nonzero first stamp is an error)."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    events = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"line {lineno}: invalid JSON: {exc}") from None
        events.append(_event_from_json(obj, lineno))
    if not events:
        raise TraceError("empty trace")
    if normalize and events[0].time != 0:
        base = events[0].time
        events = [Event(e.time - base, e.preds) for e in events]
    return TimedWord(tuple(events))


def serialize(trace: TimedWord) -> Iterator[str]:
    """One JSON line per event; parse_trace(serialize(w)) is bit-exact."""
    for e in trace:
        yield json.dumps({"t": str(e.time), "p": sorted(e.preds)})


def variability(trace: TimedWord) -> int:
    """Maximum number of events inside any open interval of length 1."""
    times = trace.times
    best = 0
    j = 0
    for i in range(len(times)):
        if j < i:
            j = i
        while j < len(times) and times[j] - times[i] < 1:
            j += 1
        # events i..j-1 all fit in (times[i]-eps, times[i]-eps+1)
        best = max(best, j - i)
    return best


def generate(seed: int, length: int, k_var: int, predicates: Iterable[str],
             density: float = 0.5) -> TimedWord:
    """Deterministic random trace with variability at most k_var."""
    if length < 1:
        raise ValueError("length must be at least 1")
    if k_var < 1:
        raise ValueError("k_var must be at least 1")
    rng = random.Random(seed)
    preds = sorted(predicates)
    den = 5 * k_var
    times = [Fraction(0)]
    while len(times) < length:
        t = times[-1] + Fraction(rng.randint(1, 11), den)
        if len(times) >= k_var:
            # keep any k_var+1 consecutive events at least 1 apart end to end
            t = max(t, times[-k_var] + 1)
        times.append(t)
    events = tuple(
        Event(t, frozenset(p for p in preds if rng.random() < density))
        for t in times)
    return TimedWord(events)


def decimal_str(q: Fraction) -> str:
    """Exact decimal rendering when the denominator allows it, else num/den."""
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return str(q)
    k = max(twos, fives)
    if k == 0:
        return str(q.numerator)
    scaled = q.numerator * 2 ** (k - twos) * 5 ** (k - fives)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"
