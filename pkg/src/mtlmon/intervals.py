"""Rational time bounds and intervals.

Endpoints are exact rationals (`fractions.Fraction`); the upper end may be
infinite.  `Bound` is a totally ordered extended rational supporting the
arithmetic needed by horizon computations (addition, subtraction of a finite
amount, max), where infinity absorbs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def rat(value) -> Fraction:
    """Coerce ints, Fractions and strings like '7', '1.5', '3/2' to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class Bound:
    """Extended rational: a finite Fraction, or +infinity encoded as value=None."""

    value: Fraction | None

    @property
    def is_inf(self) -> bool:
        return self.value is None

    def _coerce(self, other) -> "Bound":
        if isinstance(other, Bound):
            return other
        return Bound(rat(other))

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if self.is_inf:
            return False
        if other.is_inf:
            return True
        return self.value < other.value

    def __le__(self, other) -> bool:
        other = self._coerce(other)
        return self == other or self < other

    def __gt__(self, other) -> bool:
        return self._coerce(other) < self

    def __ge__(self, other) -> bool:
        return self._coerce(other) <= self

    def __add__(self, other) -> "Bound":
        other = self._coerce(other)
        if self.is_inf or other.is_inf:
            return INF
        return Bound(self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other) -> "Bound":
        # Only finite subtrahends arise (horizon recurrences subtract interval ends).
        other = self._coerce(other)
        if other.is_inf:
            raise ValueError("cannot subtract an infinite bound")
        if self.is_inf:
            return INF
        return Bound(self.value - other.value)

    def __str__(self) -> str:
        return "inf" if self.is_inf else str(self.value)


INF = Bound(None)
ZERO = Bound(Fraction(0))


def finite(value) -> Bound:
    return Bound(rat(value))


@dataclass(frozen=True)
class Interval:
    """A nonempty interval of nonnegative rationals; `hi` may be infinite."""

    lo: Fraction
    hi: Bound
    lo_open: bool
    hi_open: bool

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError(f"interval lower end must be nonnegative, got {self.lo}")
        if self.hi.is_inf:
            if not self.hi_open:
                raise ValueError("an infinite upper end must be open")
            return
        if self.lo > self.hi.value:
            raise ValueError(f"empty interval: {self}")
        if self.lo == self.hi.value and (self.lo_open or self.hi_open):
            raise ValueError(f"empty interval: {self}")

    @property
    def is_bounded(self) -> bool:
        return not self.hi.is_inf

    @property
    def is_singular(self) -> bool:
        return self.is_bounded and self.lo == self.hi.value

    def width(self) -> Bound:
        return self.hi - self.lo

    def contains(self, x: Fraction) -> bool:
        if self.lo_open:
            if x <= self.lo:
                return False
        elif x < self.lo:
            return False
        return self.below_sup(x)

    def below_sup(self, x: Fraction) -> bool:
        """The one-sided upper test: x < sup if the right end is open, x <= sup if closed."""
        if self.hi.is_inf:
            return True
        return x < self.hi.value if self.hi_open else x <= self.hi.value

    def subset_of(self, other: "Interval") -> bool:
        """Every point of self lies in other."""
        if other.lo > self.lo:
            return False
        if other.lo == self.lo and other.lo_open and not self.lo_open:
            return False
        if self.hi > other.hi:
            return False
        if self.hi == other.hi and other.hi_open and not self.hi_open:
            return False
        return True

    def strip_zero(self) -> "Interval | None":
        """Remove 0 from the interval; None if nothing remains."""
        if self.lo != 0 or self.lo_open:
            return self
        if self.is_singular:
            return None
        return Interval(self.lo, self.hi, True, self.hi_open)

    def __str__(self) -> str:
        lb = "(" if self.lo_open else "["
        rb = ")" if self.hi_open else "]"
        return f"{lb}{self.lo},{self.hi}{rb}"


def interval(lo, hi, lo_open: bool = True, hi_open: bool = True) -> Interval:
    """Build an interval from loose endpoint types; hi=None means infinity."""
    hi_b = INF if hi is None or (isinstance(hi, Bound) and hi.is_inf) else (
        hi if isinstance(hi, Bound) else finite(hi))
    return Interval(rat(lo), hi_b, lo_open, hi_open if not hi_b.is_inf else True)


FULL = interval(0, None)  # (0, inf), the default when no interval is written
