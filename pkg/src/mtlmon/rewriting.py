"""Separation rewriting: untimed backbone over bounded timed atoms.

The pipeline is to_normal_form -> extract_unbounded -> atomize.  Normal form
means: unbounded operators appear only as the plain untimed until/since and
the unbounded boxes; negation sits only on fully bounded subformulas and on
bounded operators; inside a bounded operator's arguments, every part still
carrying an unbounded operator is exposed at the top boolean level (second
argument through conjunction, first through disjunction).  Boolean structure
that is already free of unbounded operators is left factored: distributing
it would square the formula at every step for no benefit, since only
unbounded-rooted parts are ever extracted.  Extraction then repeatedly
applies one of the published equivalences at an innermost redex of maximal
unbounding depth until no unbounded operator is left under a bounded one.
Working deepest-first matters: a rule fired at unbounding depth d only
creates bounded-over-unbounded material strictly below d, so each depth
level is cleared in finitely many steps and never revisited.  Every
equivalence preserves strong and weak finite-trace satisfaction at every
position, which the test suite checks rule by rule against the oracle.

Interval-boundary variants follow one derivation principle: a witness
allowed at distance exactly `a` shortens the hold obligation to the open
interval (0,a), and auxiliary operators inherit the redex's lower-bound
strictness.  A top-closed redex lets witnesses and chain events sit at
distance exactly `b` (or `2b`) apart, so every window through which a
witness is *found* inherits the redex's upper-bound strictness too: the
opposite-direction bridging windows, the sparse-gap probes in both
directions, and the chain-closure witness strips (whose guard strip closes
both ends to keep the b-spaced grid covered).  Windows expressing pure hold
*obligations* keep their printed open bounds.

Two shapes need care beyond window bounds.  First, rules whose result is a
conjunction with the extracted part (an unconditional box part) lose the
redex's vacuous end-of-trace acceptance, where the weak reading never
consults the second argument; those results carry an extra disjunct (the
redex with an unsatisfiable witness goal) that is false on complete
behaviours and in the strong reading, and weakly true exactly in the
vacuous case.  Second, one class has no sound one-sided rule at all: an
unbounded *past* operator directly under a bounded *past* operator.  The
candidate equivalence obtained by time-mirroring the future rule is wrong
on finite traces (the trace start is a hard boundary for past operators,
with no optimistic reading to compensate; a three-event counterexample is
checked in the unit tests).  When the embedded part looks only backward and
a bounded distance forward (finite future reach) no rewrite is needed: the
window machinery evaluates it with a per-position recurrence, and
`is_separated` accepts it in place.  When it also contains an unbounded
future operator, separation refuses with SeparationError rather than
produce an unsound rewrite.

The working node set here extends the core with Or, FalseF and the
unbounded Always/Historically so that normal-form clauses are directly
representable; bounded boxes are encoded as negated untils.
"""

from __future__ import annotations

import sys
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

from .formulas import (
    FALSE, TRUE, Always, And, Atom, Eventually, FalseF, Formula, GSince,
    GUntil, Historically, Implies, Next, Not, Once, Or, Since, TrueF, Until,
    WeakSince, WeakUntil, children, future_reach, mirror, node_interval,
    size, subformulas, with_children,
)
from .intervals import FULL, Interval, interval

# rewriting builds long association chains and most helpers here walk them
# recursively; the default limit is too tight for legitimate outputs
sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))

_KEY_MEMO: dict = {}
_KEY_MASK = (1 << 62) - 1


def _det_key(f: Formula) -> int:
    """Structural sort key, deterministic across processes (no reliance on
    randomised string hashing).  Connective lists are sorted by it so that
    variants of a chain share their tree shape."""
    k = _KEY_MEMO.get(f)
    if k is None:
        own = node_interval(f)
        ivk = (0,) if own is None else (
            1, own.lo, own.lo_open, own.hi_open,
            own.hi.value if not own.hi.is_inf else -1)
        name = zlib.crc32(f.name.encode()) if isinstance(f, Atom) else 0
        k = hash((zlib.crc32(type(f).__name__.encode()), name, ivk,
                  getattr(f, "c", 0))
                 + tuple(_det_key(x) for x in children(f))) & _KEY_MASK
        _KEY_MEMO[f] = k
    return k


_INTERN: dict = {}


def _canon(f: Formula) -> Formula:
    """One shared object per distinct tree, so that equality checks resolve
    by identity almost everywhere."""
    g = _INTERN.get(f)
    if g is None:
        _INTERN[f] = f
        g = f
    return g


def _reset_caches():
    # the node and key tables only speed things up; dropping them between
    # top-level calls keeps a long run's memory flat
    _INTERN.clear()
    _KEY_MEMO.clear()
    _SEPFREE_MEMO.clear()
    _UD_MEMO.clear()


def _intern_tree(f: Formula, _seen: dict | None = None) -> Formula:
    """Bottom-up canonicalisation of a whole tree.  The memo is keyed by
    object identity, which is valid because the root keeps every node of the
    input alive for the duration of the call; it makes revisits of shared
    subtrees free of any structural hashing."""
    seen = {} if _seen is None else _seen
    hit = seen.get(id(f))
    if hit is not None:
        return hit
    kids = children(f)
    new = tuple(_intern_tree(k, seen) for k in kids)
    g = f if all(a is b for a, b in zip(new, kids)) else with_children(f, new)
    g = _canon(g)
    seen[id(f)] = g
    return g

DEFAULT_NODE_BUDGET = 10 ** 6


class RewriteBudgetError(RuntimeError):
    """The rewrite grew past the node-count budget."""


class SeparationError(RuntimeError):
    """Internal invariant violation during separation."""


@dataclass
class RewriteTrace:
    steps: list[tuple[str, Formula, Formula]] = field(default_factory=list)

    def record(self, rule_id: str, before: Formula, after: Formula):
        self.steps.append((rule_id, before, after))


@dataclass
class SeparatedFormula:
    backbone: Formula
    atom_map: dict[str, Formula]
    separated: Formula  # pre-atomize separated form

    def substituted(self) -> Formula:
        """Replace backbone atoms by their bounded formulas (inverse of atomize)."""
        table = {Atom(name): f for name, f in self.atom_map.items()}

        def sub(g: Formula) -> Formula:
            if g in table:
                return table[g]
            return with_children(g, tuple(sub(k) for k in children(g)))

        return sub(self.backbone)


# ---------------------------------------------------------------------------
# smart constructors (only transformations sound for all three relations)

def neg(f: Formula) -> Formula:
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def _implies(p: Formula, q: Formula, depth: int = 4) -> bool:
    """Conservative syntactic entailment, sound in all three relations at
    once: True only if p's value is below q's under strong, neutral and weak
    evaluation at every position of every word.  False means "unknown"."""
    if p == q or isinstance(p, FalseF) or isinstance(q, TrueF):
        return True
    if depth == 0:
        return False
    d = depth - 1
    if isinstance(p, Not) and isinstance(q, Not):
        # complement swaps the relation on both sides, so the order flips
        return _implies(q.arg, p.arg, d)
    if isinstance(p, And) and (_implies(p.left, q, d) or _implies(p.right, q, d)):
        return True
    if isinstance(q, Or) and (_implies(p, q.left, d) or _implies(p, q.right, d)):
        return True
    if isinstance(q, And):
        return _implies(p, q.left, d) and _implies(p, q.right, d)
    if isinstance(p, Or):
        return _implies(p.left, q, d) and _implies(p.right, q, d)
    if type(p) is type(q):
        if isinstance(p, (Until, Since)):
            # same witness and hold set work in the wider window; the weak
            # escape only compares the upper end, which cannot shrink
            return (p.left == q.left and p.right == q.right
                    and p.ivl.subset_of(q.ivl))
        if isinstance(p, (GUntil, GSince)):
            # the hold zone reads the offset and the lower end, so those
            # must match exactly; only the upper end may widen
            return (p.left == q.left and p.right == q.right and p.c == q.c
                    and p.ivl.lo == q.ivl.lo and p.ivl.subset_of(q.ivl))
    return False


def conj(a: Formula, b: Formula) -> Formula:
    if isinstance(a, FalseF) or isinstance(b, FalseF):
        return FALSE
    if isinstance(a, TrueF):
        return b
    if isinstance(b, TrueF):
        return a
    if _implies(a, b):
        return a
    if _implies(b, a):
        return b
    return _canon(And(a, b))


def disj(a: Formula, b: Formula) -> Formula:
    if isinstance(a, TrueF) or isinstance(b, TrueF):
        return TRUE
    if isinstance(a, FalseF):
        return b
    if isinstance(b, FalseF):
        return a
    if _implies(a, b):
        return b
    if _implies(b, a):
        return a
    return _canon(Or(a, b))


def _prune(parts: list[Formula], keep_stronger: bool) -> list[Formula]:
    """Drop list members entailed by (conjunction) or entailing (disjunction)
    another member.  Quadratic, so long lists get plain deduplication only."""
    if len(parts) > 32:
        return list(dict.fromkeys(parts))
    out: list[Formula] = []
    for p in parts:
        dominated = False
        for i, q in enumerate(out):
            win = _implies(q, p) if keep_stronger else _implies(p, q)
            if win:
                dominated = True
                break
            lose = _implies(p, q) if keep_stronger else _implies(q, p)
            if lose:
                out[i] = p
                dominated = True
                break
        if not dominated:
            out.append(p)
    return out


def _trie(parts: list[Formula], keys: list[int], cls, bit: int,
          lo: int, hi: int) -> Formula:
    # keys are sorted, so inside [lo, hi) any bit flips 0 -> 1 at most once;
    # splitting on the highest flipping bit gives every member set the same
    # tree shape, and two sets differing in one member share every
    # combination node off the path to the difference
    if hi - lo == 1:
        return parts[lo]
    while bit >= 0:
        mask = 1 << bit
        if keys[lo] & mask == keys[hi - 1] & mask:
            bit -= 1
            continue
        a, b = lo, hi
        while a < b:
            m = (a + b) // 2
            if keys[m] & mask:
                b = m
            else:
                a = m + 1
        return _canon(cls(_trie(parts, keys, cls, bit - 1, lo, a),
                          _trie(parts, keys, cls, bit - 1, a, hi)))
    # key collision between distinct parts: fold the stragglers pairwise
    sub = parts[lo:hi]
    while len(sub) > 1:
        sub = [_canon(cls(sub[i], sub[i + 1])) if i + 1 < len(sub)
               else sub[i] for i in range(0, len(sub), 2)]
    return sub[0]


def _build_chain(parts: list[Formula], cls) -> Formula:
    if len(parts) == 1:
        return parts[0]
    keys = [_det_key(p) for p in parts]
    return _trie(parts, keys, cls, 61, 0, len(parts))


def conj_list(fs) -> Formula:
    parts: list[Formula] = []
    for f in fs:
        if isinstance(f, FalseF):
            return FALSE
        if not isinstance(f, TrueF):
            parts.extend(map(_canon, flat_and(f)))
    parts.sort(key=_det_key)
    parts = _prune(list(dict.fromkeys(parts)), keep_stronger=True)
    if any(isinstance(f, FalseF) for f in parts):
        return FALSE
    if not parts:
        return TRUE
    return _build_chain(parts, And)


def disj_list(fs) -> Formula:
    parts: list[Formula] = []
    for f in fs:
        if isinstance(f, TrueF):
            return TRUE
        if not isinstance(f, FalseF):
            parts.extend(map(_canon, flat_or(f)))
    parts.sort(key=_det_key)
    parts = _prune(list(dict.fromkeys(parts)), keep_stronger=False)
    if any(isinstance(f, TrueF) for f in parts):
        return TRUE
    if not parts:
        return FALSE
    return _build_chain(parts, Or)


def flat_and(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return flat_and(f.left) + flat_and(f.right)
    return [f]


def flat_or(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return flat_or(f.left) + flat_or(f.right)
    return [f]


def _box_until(ivl: Interval, f: Formula) -> Formula:
    """Bounded box as a negated until (normal-form-legal literal)."""
    return neg(Until(ivl, TRUE, neg(f)))


def _box_since(ivl: Interval, f: Formula) -> Formula:
    return neg(Since(ivl, TRUE, neg(f)))


def _ev_upto(x: Fraction, f: Formula) -> Formula:
    """Witness within (0,x]; empty horizon means no witness in any relation."""
    if x <= 0:
        return FALSE
    return Until(interval(0, x, True, False), TRUE, f)


def _weak_ev_upto(c: Fraction, f: Formula) -> Formula:
    """f now or strictly within (0,c]."""
    if c <= 0:
        return f
    return disj(f, Until(interval(0, c, True, False), TRUE, f))


# ---------------------------------------------------------------------------
# surface-to-working-set translation

def _working(f: Formula) -> Formula:
    """Eliminate sugar not in the rewrite working set."""
    kids = tuple(_working(k) for k in children(f))
    if isinstance(f, Implies):
        return disj(neg(kids[0]), kids[1])
    if isinstance(f, Eventually):
        ivl = f.ivl.strip_zero()
        return FALSE if ivl is None else Until(ivl, TRUE, kids[0])
    if isinstance(f, Once):
        ivl = f.ivl.strip_zero()
        return FALSE if ivl is None else Since(ivl, TRUE, kids[0])
    if isinstance(f, Always):
        ivl = f.ivl.strip_zero()
        if ivl is None:
            return TRUE
        if ivl == FULL:
            return Always(FULL, kids[0])
        return _box_until(ivl, kids[0])
    if isinstance(f, Historically):
        ivl = f.ivl.strip_zero()
        if ivl is None:
            return TRUE
        if ivl == FULL:
            return Historically(FULL, kids[0])
        return _box_since(ivl, kids[0])
    if isinstance(f, Next):
        ivl = f.ivl.strip_zero()
        return FALSE if ivl is None else Until(ivl, FALSE, kids[0])
    if isinstance(f, WeakUntil):
        ivl = f.ivl.strip_zero()
        if ivl is None:
            return kids[1]
        body = conj(kids[0], Until(ivl, kids[0], kids[1]))
        return body if ivl is f.ivl else disj(kids[1], body)
    if isinstance(f, WeakSince):
        ivl = f.ivl.strip_zero()
        if ivl is None:
            return kids[1]
        body = conj(kids[0], Since(ivl, kids[0], kids[1]))
        return body if ivl is f.ivl else disj(kids[1], body)
    return with_children(f, kids)


# ---------------------------------------------------------------------------
# published equivalences

def negate_unbounded(f: Formula) -> Formula:
    """Rewrite of not(f) for the two untimed unbounded binary operators."""
    if isinstance(f, Until) and f.ivl == FULL:
        nr, nl = neg(f.right), neg(f.left)
        return disj(Always(FULL, nr), Until(FULL, nr, conj(nr, nl)))
    if isinstance(f, Since) and f.ivl == FULL:
        nr, nl = neg(f.right), neg(f.left)
        return disj(Historically(FULL, nr), Since(FULL, nr, conj(nr, nl)))
    raise SeparationError(f"not an unbounded until/since: {f!r}")


def eliminate_unbounded_op(f: Formula) -> tuple[str, Formula]:
    """Rewrite an unbounded operator with a positive lower end into the
    canonical unbounded form plus bounded obligations."""
    if isinstance(f, (Since, GSince)):
        rule_id, out = eliminate_unbounded_op(mirror(f))
        return rule_id.replace("U", "S", 1), mirror(out)
    a = f.ivl.lo
    if f.ivl.is_bounded or a <= 0:
        raise SeparationError(f"not an eliminable unbounded operator: {f!r}")
    hold = interval(0, a, True, not f.ivl.lo_open)  # (0,a] for open a, (0,a) for closed
    if isinstance(f, Until):
        u = Until(FULL, f.left, f.right)
        return "elim-U", conj(u, _box_until(hold, conj(f.left, u)))
    if isinstance(f, GUntil):
        aux = GUntil(interval(a, 2 * a, f.ivl.lo_open, False), f.c, f.left, f.right)
        witness = disj(f.right, _ev_upto(a - f.c, f.right))
        inner = Until(interval(a, None, f.ivl.lo_open, True), f.left, witness)
        return "elim-GU", disj(aux, _weak_ev_upto(f.c, inner))
    raise SeparationError(f"not an eliminable unbounded operator: {f!r}")


def _phi_guard(alpha: Formula, b: Fraction, hi_open: bool) -> Formula:
    # With a top-closed redex the event grid may step by exactly b, so the
    # gap probes (both directions) must see distance exactly b and the strip
    # they trigger must cover its closed endpoints; with an open redex the
    # open windows are exact.
    xlb = Until(interval(0, b, True, hi_open), FALSE, TRUE)
    ylb = Since(interval(0, b, True, hi_open), FALSE, TRUE)
    return conj(
        disj(neg(xlb), _box_until(interval(b, 2 * b, hi_open, hi_open), alpha)),
        disj(ylb, conj(alpha, _box_until(interval(0, b, True, False), alpha))))


def _phi_ug(alpha: Formula, beta: Formula, b: Fraction, hi_open: bool) -> Formula:
    """Unbounded closure of a bounded-window until obligation."""
    ylb = Since(interval(0, b, True, hi_open), FALSE, TRUE)
    tail = disj(
        conj(alpha, Until(interval(b, 2 * b, True, hi_open), alpha, beta)),
        conj(neg(ylb),
             disj(beta, conj(alpha, Until(interval(0, b, True, False), alpha, beta)))))
    return Until(FULL, _phi_guard(alpha, b, hi_open), tail)


def _phi_gg(alpha: Formula, b: Fraction, hi_open: bool) -> Formula:
    return Always(FULL, _phi_guard(alpha, b, hi_open))


def _unbounded_rooted(f: Formula) -> bool:
    if isinstance(f, (Always, Historically)):
        return True
    return isinstance(f, (Until, Since, GUntil, GSince)) and not f.ivl.is_bounded


_SEPFREE_MEMO: dict = {}


def _sepfree(f: Formula) -> bool:
    """No unbounded operator anywhere inside (the module-level memo is safe:
    formulas are immutable)."""
    hit = _SEPFREE_MEMO.get(f)
    if hit is None:
        own = node_interval(f)
        hit = (own is None or own.is_bounded) and all(
            _sepfree(k) for k in children(f))
        _SEPFREE_MEMO[f] = hit
    return hit


def _past_rooted(f: Formula) -> bool:
    return isinstance(f, (Since, GSince, Historically, Once, WeakSince))


def apply_extraction(redex: Formula, side: str, index: int) -> tuple[str, Formula]:
    """Apply the extraction equivalence pulling the unbounded-rooted part at
    `index` of the redex's conjunct list (side='right') or disjunct list
    (side='left') out of the bounded operator's scope."""
    if isinstance(redex, (Since, GSince)):
        part = (flat_and(redex.right) if side == "right"
                else flat_or(redex.left))[index]
        if _past_rooted(part):
            raise SeparationError(
                "no sound one-sided rule: unbounded past operator under a "
                "bounded past operator")
        rule_id, out = apply_extraction(mirror(redex), side, index)
        return rule_id.replace("U", "S", 1), mirror(out)
    if not isinstance(redex, (Until, GUntil)) or not redex.ivl.is_bounded:
        raise SeparationError(f"not a bounded redex: {redex!r}")

    ivl = redex.ivl
    a, b = ivl.lo, ivl.hi.value
    gen = isinstance(redex, GUntil)
    tag = "GU" if gen else "U"
    i_02b = interval(0, 2 * b)
    i_0b = interval(0, b)
    # windows admitting a witness: a top-closed redex puts events at distance
    # exactly b (or 2b) of each other, so these windows close their upper end
    i_0b_x = interval(0, b, True, ivl.hi_open)
    i_02b_x = interval(0, 2 * b, True, ivl.hi_open)

    def rebuild2(arg2: Formula) -> Formula:
        return (GUntil(ivl, redex.c, redex.left, arg2) if gen
                else Until(ivl, redex.left, arg2))

    def rebuild1(arg1: Formula) -> Formula:
        return (GUntil(ivl, redex.c, arg1, redex.right) if gen
                else Until(ivl, arg1, redex.right))

    def filter_op(arg1: Formula, goal: Formula) -> Formula:
        # rules 5/6: the window guaranteeing the hold phase reaches the redex
        if gen:
            c = redex.c
            return GUntil(interval(c, c + (b - a)), c, arg1, goal)
        return Until(i_0b, arg1, goal)

    # a conjunction-shaped result hides the vacuous end-of-trace acceptance of
    # the redex: the redex can be weakly true with the extracted part never
    # consulted, so those shapes get an extra disjunct that is the redex with
    # an unsatisfiable witness goal.  It is constantly false outside the weak
    # relation and on complete behaviours, and weakly true exactly when the
    # redex accepts vacuously.
    escape = rebuild2(FALSE)

    if side == "right":
        parts = flat_and(redex.right)
        psi = parts[index]
        rest = parts[:index] + parts[index + 1:]
        if isinstance(psi, Until) and not psi.ivl.is_bounded:
            al, be = psi.left, psi.right
            r1 = rebuild2(conj_list([Until(i_02b_x, al, be)] + rest))
            r2 = rebuild2(conj_list([_box_until(i_02b, al)] + rest))
            return f"{tag}1", disj(r1, conj(r2, _phi_ug(al, be, b, ivl.hi_open)))
        if isinstance(psi, Always):
            al = psi.arg
            r = rebuild2(conj_list([_box_until(i_02b, al)] + rest))
            return f"{tag}2", disj(conj(r, _phi_gg(al, b, ivl.hi_open)), escape)
        if isinstance(psi, Since) and not psi.ivl.is_bounded:
            al, be = psi.left, psi.right
            r1 = rebuild2(conj_list([Since(i_0b_x, al, be)] + rest))
            r2 = rebuild2(conj_list([_box_since(i_0b_x, al)] + rest))
            return f"{tag}3", disj(r1, conj(r2, psi))
        if isinstance(psi, Historically):
            al = psi.arg
            r = rebuild2(conj_list([_box_since(i_0b_x, al)] + rest))
            return f"{tag}4", disj(conj(r, psi), escape)
        raise SeparationError(f"conjunct {index} is not unbounded-rooted: {psi!r}")

    if side != "left":
        raise SeparationError(f"side must be 'left' or 'right': {side!r}")
    parts = flat_or(redex.left)
    psi = parts[index]
    rest = parts[:index] + parts[index + 1:]
    theta_reach = Until(ivl, TRUE, redex.right)
    if isinstance(psi, Until) and not psi.ivl.is_bounded:
        al, be = psi.left, psi.right
        newdisj = disj_list([Until(i_02b_x, al, be)] + rest)
        d1 = rebuild1(newdisj)
        d2 = conj_list([filter_op(newdisj, _box_until(i_02b, al)),
                        theta_reach, _phi_ug(al, be, b, ivl.hi_open)])
        return f"{tag}5", disj(d1, d2)
    if isinstance(psi, Always):
        al = psi.arg
        chi = disj_list(rest)
        d1 = rebuild1(chi)
        d2 = conj_list([filter_op(chi, _box_until(i_02b, al)),
                        theta_reach, _phi_gg(al, b, ivl.hi_open)])
        return f"{tag}6", disj(d1, d2)
    if isinstance(psi, Since) and not psi.ivl.is_bounded:
        al, be = psi.left, psi.right
        s0b = Since(i_0b, al, be)
        d1 = rebuild1(disj_list([s0b] + rest))
        d2 = rebuild1(disj_list([_box_since(i_0b, al), s0b] + rest))
        return f"{tag}7", disj(d1, conj(d2, psi))
    if isinstance(psi, Historically):
        al = psi.arg
        d1 = rebuild1(disj_list(rest))
        d2 = rebuild1(disj_list([_box_since(i_0b, al)] + rest))
        return f"{tag}8", disj(d1, conj(d2, psi))
    raise SeparationError(f"disjunct {index} is not unbounded-rooted: {psi!r}")


# ---------------------------------------------------------------------------
# normalisation

def _local_fix(f: Formula, cap: int) -> Formula:
    if isinstance(f, Not):
        x = f.arg
        if isinstance(x, TrueF):
            return FALSE
        if isinstance(x, FalseF):
            return TRUE
        if isinstance(x, Not):
            return x.arg
        if isinstance(x, And) and not _sepfree(x):
            return disj(neg(x.left), neg(x.right))
        if isinstance(x, Or) and not _sepfree(x):
            return conj(neg(x.left), neg(x.right))
        if isinstance(x, Always):
            return Until(FULL, TRUE, neg(x.arg))
        if isinstance(x, Historically):
            return Since(FULL, TRUE, neg(x.arg))
        if isinstance(x, (Until, Since)) and not x.ivl.is_bounded:
            if x.ivl == FULL:
                return negate_unbounded(x)
            return f  # inner elimination runs first; revisited next pass
        if isinstance(x, (GUntil, GSince)) and not x.ivl.is_bounded:
            return f
        return f  # fully bounded subformula or bounded operator

    if isinstance(f, And):
        return conj(f.left, f.right)
    if isinstance(f, Or):
        return disj(f.left, f.right)

    if isinstance(f, (GUntil, GSince)):
        if f.ivl.lo == 0:
            # anchor offset is forced to 0 and the hold zone covers everything
            cls = Until if isinstance(f, GUntil) else Since
            return cls(f.ivl, f.left, f.right)
        if f.ivl.is_singular:
            # hold zone is empty: only the witness matters
            cls = Until if isinstance(f, GUntil) else Since
            return cls(f.ivl, TRUE, f.right)

    if isinstance(f, (Until, Since, GUntil, GSince)):
        if not f.ivl.is_bounded:
            if f.ivl == FULL:
                return f
            return eliminate_unbounded_op(f)[1]
        # expose hidden unbounded material at the top boolean level of each
        # argument, one alternation layer per pass; boolean structure that is
        # already unbounded-free stays factored
        parts2 = flat_and(f.right)
        for i, p in enumerate(parts2):
            if isinstance(p, Or) and not _sepfree(p):
                rest = parts2[:i] + parts2[i + 1:]
                return disj_list(
                    with_children(f, (f.left, conj_list([d] + rest)))
                    for d in flat_or(p))
        parts1 = flat_or(f.left)
        for i, p in enumerate(parts1):
            if isinstance(p, And) and not _sepfree(p):
                rest = parts1[:i] + parts1[i + 1:]
                return conj_list(
                    with_children(f, (disj_list([c] + rest), f.right))
                    for c in flat_and(p))
        arg2 = conj_list(parts2)
        arg1 = disj_list(parts1)
        if arg1 != f.left or arg2 != f.right:
            return with_children(f, (arg1, arg2))
        return f

    return f


def _norm(f: Formula, cap: int, memo: dict) -> Formula:
    hit = memo.get(f)
    if hit is not None:
        return hit
    cur = f
    for _ in range(100_000):
        kids = tuple(_norm(k, cap, memo) for k in children(cur))
        if all(a is b for a, b in zip(kids, children(cur))):
            rebuilt = _canon(cur)
        else:
            rebuilt = _canon(with_children(cur, kids))
        fixed = _canon(_local_fix(rebuilt, cap))
        if fixed is rebuilt:
            memo[f] = fixed
            memo[fixed] = fixed
            return fixed
        cur = fixed
    raise SeparationError("normalisation did not reach a fixpoint")


def to_normal_form(f: Formula, budget: int = DEFAULT_NODE_BUDGET) -> Formula:
    _reset_caches()
    out = _norm(_working(f), budget, {})
    _check_budget(out, budget)
    return out


def _check_budget(f: Formula, budget: int):
    n = size(f)
    if n > budget:
        raise RewriteBudgetError(
            f"rewritten formula has {n} distinct subformulas (budget {budget})")


# ---------------------------------------------------------------------------
# structural checkers and the unbounding-depth measure

_UD_MEMO: dict = {}


def unbounding_depth(f: Formula, _memo: dict | None = None) -> int:
    memo = _UD_MEMO if _memo is None else _memo
    hit = memo.get(f)
    if hit is not None:
        return hit
    inner = max((unbounding_depth(k, memo) for k in children(f)), default=0)
    out = inner + 1 if _unbounded_rooted(f) else inner
    memo[f] = out
    return out


def is_normal_form(f: Formula) -> bool:
    for g in subformulas(f):
        if isinstance(g, (Implies, Eventually, Once, Next, WeakUntil, WeakSince)):
            return False
        if isinstance(g, (Always, Historically)) and g.ivl != FULL:
            return False
        if isinstance(g, (Until, Since)) and not g.ivl.is_bounded and g.ivl != FULL:
            return False
        if isinstance(g, (GUntil, GSince)) and not g.ivl.is_bounded:
            return False
        if isinstance(g, Not):
            x = g.arg
            ok = _sepfree(x) or (
                isinstance(x, (Until, Since, GUntil, GSince)) and x.ivl.is_bounded)
            if not ok:
                return False
        if isinstance(g, (Until, Since, GUntil, GSince)) and g.ivl.is_bounded:
            if any(isinstance(p, Or) and not _sepfree(p)
                   for p in flat_and(g.right)):
                return False
            if any(isinstance(p, And) and not _sepfree(p)
                   for p in flat_or(g.left)):
                return False
    return True


def is_separated(f: Formula) -> bool:
    """Every bounded operator's truth value depends on a finite forward
    horizon: no unbounded future operator in a bounded scope.  An unbounded
    past operator under a bounded one is accepted as long as its own future
    reach is finite; the window machinery evaluates such a subformula with a
    per-position recurrence instead of a lookup bounded both ways."""
    for g in subformulas(f):
        if isinstance(g, (Until, Since, GUntil, GSince)) and g.ivl.is_bounded:
            if future_reach(g).is_inf:
                return False
    return True


# ---------------------------------------------------------------------------
# extraction engine

def _find_redexes(f: Formula) -> list[tuple[Formula, str, int, int]]:
    """(redex, side, index, depth) for every extractable unbounded part,
    innermost first.

    An unbounded past part under a bounded *past* operator is not a redex:
    with finite future reach it may stay put (see is_separated), and with
    unbounded future content inside there is no sound rule, so separation is
    refused here rather than left to produce a wrong equivalence."""
    out = []
    for g in subformulas(f):
        if not isinstance(g, (Until, Since, GUntil, GSince)):
            continue
        if not g.ivl.is_bounded:
            continue
        past_redex = isinstance(g, (Since, GSince))
        for side, parts in (("right", flat_and(g.right)),
                            ("left", flat_or(g.left))):
            for idx, part in enumerate(parts):
                if not _unbounded_rooted(part):
                    continue
                if past_redex and _past_rooted(part):
                    if future_reach(part).is_inf:
                        raise SeparationError(
                            "cannot separate: unbounded future operator "
                            "nested in an unbounded past operator under a "
                            f"bounded past operator ({part!r})")
                    continue
                out.append((g, side, idx, unbounding_depth(g)))
    return out


def substitute(f: Formula, target: Formula, replacement: Formula) -> Formula:
    memo: dict = {}

    def sub(g: Formula) -> Formula:
        hit = memo.get(g)
        if hit is not None:
            return hit
        if g == target:
            out = replacement
        else:
            kids = children(g)
            new = tuple(sub(k) for k in kids)
            # keep untouched subtrees as the same objects so the caches
            # keyed on them still hit afterwards
            out = g if all(a is b for a, b in zip(new, kids)) else \
                with_children(g, new)
        memo[g] = out
        return out

    return sub(f)


def _direct_redex(g: Formula, level: int) -> tuple[str, int] | None:
    """First extractable part directly inside g, provided g sits at the
    nesting level currently being cleared."""
    if not isinstance(g, (Until, Since, GUntil, GSince)):
        return None
    if not g.ivl.is_bounded or unbounding_depth(g) != level:
        return None
    past_redex = isinstance(g, (Since, GSince))
    for side, parts in (("right", flat_and(g.right)),
                        ("left", flat_or(g.left))):
        for idx, part in enumerate(parts):
            if not _unbounded_rooted(part):
                continue
            if past_redex and _past_rooted(part):
                continue
            return side, idx
    return None


def _extract_pass(f: Formula, level: int, budget: int, nmemo: dict,
                  trace: RewriteTrace | None, memo: dict,
                  fired: list) -> Formula:
    """One bottom-up sweep firing every extraction at the given nesting
    level.  Children are cleared before their parent, so a part exposed by
    an inner extraction is consumed by the enclosing operator in the same
    sweep instead of waiting a full global rewrite cycle."""
    hit = memo.get(f)
    if hit is not None:
        return hit
    kids = children(f)
    new = tuple(_extract_pass(k, level, budget, nmemo, trace, memo, fired)
                for k in kids)
    g = f if all(a is b for a, b in zip(new, kids)) else \
        _canon(with_children(f, new))
    # renormalising may split a variant list whose members the sweep has
    # cleared but whose combinations it has not seen yet, so re-enter
    g2 = _norm(g, budget, nmemo)
    if g2 is not g:
        g2 = _extract_pass(g2, level, budget, nmemo, trace, memo, fired)
    else:
        r = _direct_redex(g2, level)
        if r is not None:
            fired.append(1)
            if len(fired) > 200_000:
                raise SeparationError(
                    "extraction did not terminate in 200000 rule applications")
            rule_id, replacement = apply_extraction(g2, *r)
            if trace is not None:
                trace.record(rule_id, g2, replacement)
            repl = _norm(_intern_tree(replacement), budget, nmemo)
            # the replacement still holds the redex's remaining parts (and
            # the extracted one, now exposed higher up); recurse to finish
            g2 = _extract_pass(repl, level, budget, nmemo, trace, memo, fired)
    memo[f] = g2
    return g2


def extract_unbounded(f: Formula, budget: int = DEFAULT_NODE_BUDGET,
                      trace: RewriteTrace | None = None) -> Formula:
    if not is_normal_form(f):
        raise SeparationError("extraction requires normal-form input")
    phase_depth = None
    nmemo: dict = {}
    fired: list = []
    f = _norm(_intern_tree(f), budget, nmemo)
    while True:
        redexes = _find_redexes(f)
        if not redexes:
            break
        # work strictly level by level, deepest nesting first: every rule
        # fired at depth d only creates bounded-over-unbounded material at
        # depth d-1 or less, so each level's workload is one sweep and a
        # level once cleared stays clear
        depth = max(r[3] for r in redexes)
        if phase_depth is not None and depth >= phase_depth:
            raise SeparationError(
                f"unbounding depth did not fall below {phase_depth}")
        phase_depth = depth
        f = _extract_pass(f, depth, budget, nmemo, trace, {}, fired)
        f = _norm(f, budget, nmemo)
        _check_budget(f, budget)
    if not is_separated(f):
        raise SeparationError("extraction ended with a non-separated formula")
    return f


# ---------------------------------------------------------------------------
# atomisation

def _has_timed(g: Formula) -> bool:
    return any(getattr(s, "ivl", FULL) != FULL for s in subformulas(g))


def atomize(f: Formula) -> SeparatedFormula:
    """Name each maximal finite-future-reach subformula with timed content
    Q1, Q2, ... (structurally identical subformulas share a name) and return
    the untimed backbone over those names plus the bare predicates."""
    if not is_separated(f):
        raise SeparationError("atomize requires a separated formula")
    names: dict[Formula, str] = {}
    order: list[Formula] = []

    def walk(g: Formula) -> Formula:
        if isinstance(g, (TrueF, FalseF, Atom)):
            return g
        if not future_reach(g).is_inf and _has_timed(g):
            if g not in names:
                names[g] = f"Q{len(names) + 1}"
                order.append(g)
            return Atom(names[g])
        return with_children(g, tuple(walk(k) for k in children(g)))

    backbone = walk(f)
    for g in subformulas(backbone):
        ok = isinstance(g, (TrueF, FalseF, Atom, Not, And, Or)) or (
            isinstance(g, (Until, Since, Always, Historically))
            and g.ivl == FULL)
        if not ok:
            raise SeparationError(f"backbone kept a timed node: {g!r}")
    return SeparatedFormula(
        backbone=backbone,
        atom_map={names[g]: g for g in order},
        separated=f)


def separate(f: Formula, budget: int = DEFAULT_NODE_BUDGET
             ) -> tuple[SeparatedFormula, RewriteTrace]:
    trace = RewriteTrace()
    nf = to_normal_form(f, budget)
    sep = extract_unbounded(nf, budget, trace)
    return atomize(sep), trace


# ---------------------------------------------------------------------------
# display helper: fold encoded boxes and diamonds back into sugar

def resugar(f: Formula) -> Formula:
    if isinstance(f, Not):
        x = f.arg
        if isinstance(x, Until) and isinstance(x.left, TrueF) and isinstance(x.right, Not):
            return Always(x.ivl, resugar(x.right.arg))
        if isinstance(x, Since) and isinstance(x.left, TrueF) and isinstance(x.right, Not):
            return Historically(x.ivl, resugar(x.right.arg))
        if isinstance(x, And) and isinstance(x.left, Not) and isinstance(x.right, Not):
            return Or(resugar(x.left.arg), resugar(x.right.arg))
    if isinstance(f, Until) and isinstance(f.left, TrueF):
        return Eventually(f.ivl, resugar(f.right))
    if isinstance(f, Since) and isinstance(f.left, TrueF):
        return Once(f.ivl, resugar(f.right))
    return with_children(f, tuple(resugar(k) for k in children(f)))
