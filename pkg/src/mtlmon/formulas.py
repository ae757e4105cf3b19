"""Formula AST for metric temporal logic with generalized until/since.

Core constructors (what the evaluators consume): TrueF, Atom, Not, And,
Until, Since, GUntil, GSince.  Everything else is sugar; `desugar` maps any
formula to the core set.  Until/Since in core form never contain 0 in their
interval; closed-at-0 intervals are meaningful only on weak operators, whose
expansion strips the 0 (strict-future/past semantics cannot hit it anyway).

`future_reach`/`past_reach` bound how far evaluation looks from a position;
they may be negative (an operator can be satisfiable only by looking at
events strictly newer/older than its own anchor allows, e.g. a since whose
witness must sit at least 2 time units back contributes reach -2).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction

from .intervals import INF, ZERO, Bound, Interval, interval


class Formula:
    """Base class; all nodes are frozen dataclasses and compare structurally."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    ivl: Interval
    left: Formula
    right: Formula

    def __post_init__(self):
        if self.ivl.contains(Fraction(0)):
            raise ValueError("strong until cannot use an interval containing 0")


@dataclass(frozen=True)
class Since(Formula):
    ivl: Interval
    left: Formula
    right: Formula

    def __post_init__(self):
        if self.ivl.contains(Fraction(0)):
            raise ValueError("strong since cannot use an interval containing 0")


def _check_anchor(ivl: Interval, c: Fraction):
    if c < 0:
        raise ValueError(f"anchor offset must be nonnegative, got {c}")
    if c > ivl.lo:
        raise ValueError(f"anchor offset {c} exceeds interval lower end {ivl.lo}")


@dataclass(frozen=True)
class GUntil(Formula):
    """Generalized until: the hold obligation starts c after the anchor and
    must persist until lo(ivl)-c before the witness."""

    ivl: Interval
    c: Fraction
    left: Formula
    right: Formula

    def __post_init__(self):
        _check_anchor(self.ivl, self.c)
        if self.ivl.contains(Fraction(0)):
            raise ValueError("generalized until cannot use an interval containing 0")


@dataclass(frozen=True)
class GSince(Formula):
    ivl: Interval
    c: Fraction
    left: Formula
    right: Formula

    def __post_init__(self):
        _check_anchor(self.ivl, self.c)
        if self.ivl.contains(Fraction(0)):
            raise ValueError("generalized since cannot use an interval containing 0")


@dataclass(frozen=True)
class Eventually(Formula):
    ivl: Interval
    arg: Formula


@dataclass(frozen=True)
class Always(Formula):
    ivl: Interval
    arg: Formula


@dataclass(frozen=True)
class Once(Formula):
    ivl: Interval
    arg: Formula


@dataclass(frozen=True)
class Historically(Formula):
    ivl: Interval
    arg: Formula


@dataclass(frozen=True)
class Next(Formula):
    ivl: Interval
    arg: Formula


@dataclass(frozen=True)
class WeakUntil(Formula):
    ivl: Interval
    left: Formula
    right: Formula


@dataclass(frozen=True)
class WeakSince(Formula):
    ivl: Interval
    left: Formula
    right: Formula


def _cached_hash(self) -> int:
    # rewriting produces heavily shared terms; an uncached recursive hash
    # makes every memo lookup walk the whole tree
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self),) + tuple(
            getattr(self, f.name) for f in dataclasses.fields(self)))
        object.__setattr__(self, "_hash", h)
    return h


def _make_fast_eq(names: tuple[str, ...]):
    # compare hashes before fields: a mismatch settles deep comparisons of
    # large distinct trees in constant time
    def _fast_eq(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented
        if _cached_hash(self) != _cached_hash(other):
            return False
        d1, d2 = self.__dict__, other.__dict__
        return all(d1[n] == d2[n] for n in names)
    return _fast_eq


for _cls in (TrueF, FalseF, Atom, Not, And, Or, Implies, Until, Since,
             GUntil, GSince, Eventually, Always, Once, Historically, Next,
             WeakUntil, WeakSince):
    _cls.__hash__ = _cached_hash
    _cls.__eq__ = _make_fast_eq(
        tuple(f.name for f in dataclasses.fields(_cls)))
del _cls


TRUE = TrueF()
FALSE = FalseF()

CORE_NODES = (TrueF, Atom, Not, And, Until, Since, GUntil, GSince)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (TrueF, FalseF, Atom)):
        return ()
    if isinstance(f, (Not, Eventually, Always, Once, Historically, Next)):
        return (f.arg,)
    return (f.left, f.right)


def with_children(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    if isinstance(f, (TrueF, FalseF, Atom)):
        return f
    if isinstance(f, Not):
        return Not(kids[0])
    if isinstance(f, (Eventually, Always, Once, Historically, Next)):
        return type(f)(f.ivl, kids[0])
    if isinstance(f, (And, Or, Implies)):
        return type(f)(kids[0], kids[1])
    if isinstance(f, (Until, Since, WeakUntil, WeakSince)):
        return type(f)(f.ivl, kids[0], kids[1])
    if isinstance(f, (GUntil, GSince)):
        return type(f)(f.ivl, f.c, kids[0], kids[1])
    raise TypeError(f"unknown node {type(f).__name__}")


def node_interval(f: Formula) -> Interval | None:
    return getattr(f, "ivl", None)


def subformulas(f: Formula) -> list[Formula]:
    """All distinct subformulas, children before parents."""
    seen: set[Formula] = set()
    order: list[Formula] = []

    def visit(g: Formula):
        if g in seen:
            return
        for kid in children(g):
            visit(kid)
        seen.add(g)
        order.append(g)

    visit(f)
    return order


def size(f: Formula) -> int:
    """Number of distinct subformulas."""
    return len(subformulas(f))


def atoms(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


def is_bounded(f: Formula) -> bool:
    """True iff every interval in the formula has a finite upper end."""
    return all(
        node_interval(g) is None or node_interval(g).is_bounded
        for g in subformulas(f)
    )


def _strict(ivl: Interval) -> Interval | None:
    """Interval with 0 removed; None when the result is empty."""
    return ivl.strip_zero()


def desugar(f: Formula, _memo: dict | None = None) -> Formula:
    """Map any formula to the core constructor set."""
    memo = {} if _memo is None else _memo
    hit = memo.get(f)
    if hit is not None:
        return hit

    def d(g: Formula) -> Formula:
        return desugar(g, memo)

    if isinstance(f, (TrueF, Atom)):
        out = f
    elif isinstance(f, FalseF):
        out = Not(TRUE)
    elif isinstance(f, Not):
        out = Not(d(f.arg))
    elif isinstance(f, And):
        out = And(d(f.left), d(f.right))
    elif isinstance(f, Or):
        out = Not(And(Not(d(f.left)), Not(d(f.right))))
    elif isinstance(f, Implies):
        out = Not(And(d(f.left), Not(d(f.right))))
    elif isinstance(f, Until):
        out = Until(f.ivl, d(f.left), d(f.right))
    elif isinstance(f, Since):
        out = Since(f.ivl, d(f.left), d(f.right))
    elif isinstance(f, GUntil):
        out = GUntil(f.ivl, f.c, d(f.left), d(f.right))
    elif isinstance(f, GSince):
        out = GSince(f.ivl, f.c, d(f.left), d(f.right))
    elif isinstance(f, Eventually):
        ivl = _strict(f.ivl)
        out = Not(TRUE) if ivl is None else Until(ivl, TRUE, d(f.arg))
    elif isinstance(f, Once):
        ivl = _strict(f.ivl)
        out = Not(TRUE) if ivl is None else Since(ivl, TRUE, d(f.arg))
    elif isinstance(f, Always):
        ivl = _strict(f.ivl)
        out = TRUE if ivl is None else Not(Until(ivl, TRUE, Not(d(f.arg))))
    elif isinstance(f, Historically):
        ivl = _strict(f.ivl)
        out = TRUE if ivl is None else Not(Since(ivl, TRUE, Not(d(f.arg))))
    elif isinstance(f, Next):
        ivl = _strict(f.ivl)
        out = Not(TRUE) if ivl is None else Until(ivl, Not(TRUE), d(f.arg))
    elif isinstance(f, WeakUntil):
        ivl = _strict(f.ivl)
        l, r = d(f.left), d(f.right)
        if ivl is None:
            # interval was exactly [0,0]: only the immediate disjunct survives
            out = r
        elif ivl is f.ivl:
            out = And(l, Until(ivl, l, r))
        else:
            out = _core_or(r, And(l, Until(ivl, l, r)))
    elif isinstance(f, WeakSince):
        ivl = _strict(f.ivl)
        l, r = d(f.left), d(f.right)
        if ivl is None:
            out = r
        elif ivl is f.ivl:
            out = And(l, Since(ivl, l, r))
        else:
            out = _core_or(r, And(l, Since(ivl, l, r)))
    else:
        raise TypeError(f"unknown node {type(f).__name__}")

    memo[f] = out
    return out


def _core_or(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def is_core(f: Formula) -> bool:
    return all(isinstance(g, CORE_NODES) for g in subformulas(f))


_MIRROR_SWAP = {
    Until: Since, Since: Until,
    GUntil: GSince, GSince: GUntil,
    Eventually: Once, Once: Eventually,
    Always: Historically, Historically: Always,
    WeakUntil: WeakSince, WeakSince: WeakUntil,
}


def mirror(f: Formula) -> Formula:
    """Swap every future operator with its past twin and vice versa."""
    if isinstance(f, Next):
        raise ValueError("next has no past twin in this grammar")
    kids = tuple(mirror(k) for k in children(f))
    cls = _MIRROR_SWAP.get(type(f))
    if cls is None:
        return with_children(f, kids)
    if isinstance(f, (GUntil, GSince)):
        return cls(f.ivl, f.c, *kids)
    if isinstance(f, (Eventually, Always, Once, Historically)):
        return cls(f.ivl, kids[0])
    return cls(f.ivl, *kids)


def future_reach(f: Formula) -> Bound:
    """How far past the anchor future evaluation may need to look."""
    return _reach(desugar(f), True, {})


def past_reach(f: Formula) -> Bound:
    return _reach(desugar(f), False, {})


def _reach(f: Formula, future: bool, memo: dict) -> Bound:
    key = (f, future)
    hit = memo.get(key)
    if hit is not None:
        return hit

    if isinstance(f, (TrueF, Atom)):
        out = ZERO
    elif isinstance(f, Not):
        out = _reach(f.arg, future, memo)
    elif isinstance(f, And):
        out = max(_reach(f.left, future, memo), _reach(f.right, future, memo))
    elif isinstance(f, (Until, Since)):
        fl = _reach(f.left, future, memo)
        fr_ = _reach(f.right, future, memo)
        same_dir = isinstance(f, Until) == future
        if same_dir:
            out = f.ivl.hi + max(fl, fr_)
        else:
            out = max(fl, fr_ - f.ivl.lo)
    elif isinstance(f, (GUntil, GSince)):
        fl = _reach(f.left, future, memo)
        fr_ = _reach(f.right, future, memo)
        same_dir = isinstance(f, GUntil) == future
        if same_dir:
            out = max(f.c + f.ivl.width() + fl, f.ivl.hi + fr_)
        else:
            out = max(fl - f.c, fr_ - f.ivl.lo)
    else:
        raise TypeError(f"reach expects core nodes, got {type(f).__name__}")

    memo[key] = out
    return out
