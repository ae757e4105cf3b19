"""Finite-word acceptors for the verdict certificates of an untimed backbone.

The backbone talks about positions, not time.  Its letters assign every
letter-alphabet name a pair of truth values (pessimistic, optimistic); a
fully resolved name carries the same value twice, and the split pair only
appears near the end of a stream, where bounded subformulas still admit two
defensible readings.  Negation swaps the two components, so each backbone
subformula also owns such a pair at every position.

Acceptance works on guessed valuation profiles.  A profile assigns each
backbone subformula its value pair at the current position.  Read forward,
a future-looking node's pair at the previous position is a one-step
recurrence over the new position's pairs, so the automaton keeps exactly
the profiles consistent with some continuation: a successor profile guesses
the future-node pairs, the step checks the recurrence against the previous
profile, and past-looking nodes evolve deterministically.  A word is
accepted once some surviving profile could legally stop, meaning every
future node sits at its end-of-word value (pessimistic false, optimistic
true); the guesses of such a run are forced to equal the true values by
backward induction from that filter.  The set of surviving profiles,
memoised lazily, is the DFA state.  Acceptance latches into a sink state:
certificate prefixes are closed under extension.

Pure-past parts of the backbone need no guessing at all.  The registry
evaluates them by the same one-step recurrences and feeds the results back
as extra letter positions, so the profile automaton only guesses where the
future is genuinely open.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .formulas import (
    Always, And, Atom, FalseF, Formula, Historically, Not, Or, Since, TrueF,
    Until, children, subformulas, with_children,
)
from .intervals import FULL
from .parser import to_text

DEFAULT_STATE_BUDGET = 2 ** 20


class StateBudgetError(RuntimeError):
    """Lazy determinisation grew past the configured state budget."""


@dataclass(frozen=True)
class BackboneLetter:
    """Total assignment over a letter alphabet, packed as two bit masks in
    alphabet order: bit i of `strong` / `weak` is the pessimistic /
    optimistic value of the i-th name.  Pessimistic implies optimistic."""

    strong: int
    weak: int

    def __post_init__(self):
        if self.strong & ~self.weak:
            raise ValueError("letter has a pessimistically-true, "
                             "optimistically-false position")


def pack_letter(alphabet: tuple[str, ...],
                assignment: Mapping[str, object]) -> BackboneLetter:
    """Build a letter from {name: bool | (strong, weak)}; missing names
    default to false (a predicate absent from an event)."""
    strong = weak = 0
    for i, name in enumerate(alphabet):
        v = assignment.get(name, False)
        s, w = v if isinstance(v, tuple) else (v, v)
        strong |= bool(s) << i
        weak |= bool(w) << i
    return BackboneLetter(strong, weak)


# node tags of the compiled backbone
_TRUE, _FALSE, _ATOM, _NOT, _AND, _OR, _UNT, _SIN, _ALW, _HIS = range(10)


def _compile_backbone(phi: Formula, alpha_index: dict[str, int]):
    """Bottom-up (tag, a, b) table; a/b are child indices (atom: letter bit)."""
    order = subformulas(phi)
    index = {g: i for i, g in enumerate(order)}
    nodes: list[tuple[int, int, int]] = []
    future: list[int] = []
    for g in order:
        if isinstance(g, TrueF):
            nodes.append((_TRUE, 0, 0))
        elif isinstance(g, FalseF):
            nodes.append((_FALSE, 0, 0))
        elif isinstance(g, Atom):
            nodes.append((_ATOM, alpha_index[g.name], 0))
        elif isinstance(g, Not):
            nodes.append((_NOT, index[g.arg], 0))
        elif isinstance(g, And):
            nodes.append((_AND, index[g.left], index[g.right]))
        elif isinstance(g, Or):
            nodes.append((_OR, index[g.left], index[g.right]))
        elif isinstance(g, Until) and g.ivl == FULL:
            future.append(len(nodes))
            nodes.append((_UNT, index[g.left], index[g.right]))
        elif isinstance(g, Since) and g.ivl == FULL:
            nodes.append((_SIN, index[g.left], index[g.right]))
        elif isinstance(g, Always) and g.ivl == FULL:
            future.append(len(nodes))
            nodes.append((_ALW, index[g.arg], 0))
        elif isinstance(g, Historically) and g.ivl == FULL:
            nodes.append((_HIS, index[g.arg], 0))
        else:
            raise ValueError(f"not an untimed backbone node: {g!r}")
    return nodes, index[phi], tuple(future)


_INIT = ("init",)
_ACCEPT = ("accept",)


class PrefixDFA:
    """Deterministic, complete acceptor over BackboneLetters.

    States are interned integers; `initial` is the state before any letter.
    `mode` selects which certificate the acceptor recognises: "good" accepts
    the words whose every continuation satisfies the backbone (pessimistic
    truth at position 0), "bad" those whose every continuation violates it
    (optimistic falsity at position 0).  Accepting states are sinks.
    """

    def __init__(self, phi: Formula, alphabet: tuple[str, ...], mode: str,
                 state_budget: int = DEFAULT_STATE_BUDGET):
        if mode not in ("good", "bad"):
            raise ValueError(f"mode must be 'good' or 'bad', not {mode!r}")
        self.formula = phi
        self.alphabet = alphabet
        self.mode = mode
        self.state_budget = state_budget
        self._nodes, self._root, self._future = _compile_backbone(
            phi, {name: i for i, name in enumerate(alphabet)})
        self._fmask = sum(1 << i for i in self._future)
        self._payloads: list[tuple] = []
        self._ids: dict[tuple, int] = {}
        self._trans: dict[tuple[int, int, int], int] = {}
        self.initial = self._intern(_INIT)
        self._accept = self._intern(_ACCEPT)

    # -- state table --------------------------------------------------------

    def _intern(self, payload: tuple) -> int:
        sid = self._ids.get(payload)
        if sid is None:
            if len(self._payloads) >= self.state_budget:
                raise StateBudgetError(
                    f"more than {self.state_budget} acceptor states for "
                    f"backbone {to_text(self.formula)}")
            sid = len(self._payloads)
            self._payloads.append(payload)
            self._ids[payload] = sid
        return sid

    @property
    def states(self) -> range:
        """All states constructed so far (lazy; grows as letters arrive)."""
        return range(len(self._payloads))

    @property
    def accepting(self) -> frozenset[int]:
        return frozenset({self._accept})

    def is_accepting(self, state: int) -> bool:
        return state == self._accept

    # -- stepping -----------------------------------------------------------

    def step(self, state: int, letter: BackboneLetter) -> int:
        key = (state, letter.strong, letter.weak)
        nxt = self._trans.get(key)
        if nxt is None:
            nxt = self._trans[key] = self._compute(state, letter)
        return nxt

    def accepts(self, word: Iterable[BackboneLetter]) -> bool:
        state = self.initial
        for letter in word:
            state = self.step(state, letter)
        return self.is_accepting(state)

    def _compute(self, state: int, letter: BackboneLetter) -> int:
        payload = self._payloads[state]
        if payload is _ACCEPT:
            return state
        prev_profiles: Iterable = (None,) if payload is _INIT else payload[1]
        fmask = self._fmask
        out = set()
        for prev in prev_profiles:
            for sb, wb in self._successors(prev, letter.strong, letter.weak):
                if sb & fmask == 0 and wb & fmask == fmask:
                    return self._accept  # some run may legally stop here
                out.add((sb, wb))
        return self._intern(("profiles", frozenset(out)))

    def _successors(self, prev, ls: int, lw: int) -> Iterator[tuple[int, int]]:
        """Profiles at the next position consistent with `prev` (None at the
        word start, where the root certificate condition applies instead)."""
        nodes = self._nodes
        future = self._future
        if prev is None:
            ps = pw = 0
        else:
            ps, pw = prev
        for guess in itertools.product(((0, 0), (0, 1), (1, 1)),
                                       repeat=len(future)):
            pairs = dict(zip(future, guess))
            sb = wb = 0
            for i, (tag, a, b) in enumerate(nodes):
                if tag == _ATOM:
                    s = (ls >> a) & 1
                    w = (lw >> a) & 1
                elif tag == _NOT:
                    s = 1 ^ ((wb >> a) & 1)
                    w = 1 ^ ((sb >> a) & 1)
                elif tag == _AND:
                    s = (sb >> a) & (sb >> b) & 1
                    w = (wb >> a) & (wb >> b) & 1
                elif tag == _OR:
                    s = ((sb >> a) | (sb >> b)) & 1
                    w = ((wb >> a) | (wb >> b)) & 1
                elif tag == _TRUE:
                    s = w = 1
                elif tag == _FALSE:
                    s = w = 0
                elif tag == _SIN:
                    if prev is None:
                        s = w = 0  # strict past: nothing before the start
                    else:
                        s = ((ps >> b) | ((ps >> a) & (ps >> i))) & 1
                        w = ((pw >> b) | ((pw >> a) & (pw >> i))) & 1
                elif tag == _HIS:
                    if prev is None:
                        s = w = 1
                    else:
                        s = (ps >> a) & (ps >> i) & 1
                        w = (pw >> a) & (pw >> i) & 1
                else:  # _UNT / _ALW: guessed, checked against prev below
                    s, w = pairs[i]
                sb |= s << i
                wb |= w << i
            if prev is None:
                root = self._root
                if self.mode == "good":
                    if not (sb >> root) & 1:
                        continue
                elif (wb >> root) & 1:
                    continue
            else:
                ok = True
                for i in future:
                    tag, a, b = nodes[i]
                    if tag == _UNT:
                        ns = ((sb >> b) | ((sb >> a) & (sb >> i))) & 1
                        nw = ((wb >> b) | ((wb >> a) & (wb >> i))) & 1
                    else:
                        ns = (sb >> a) & (sb >> i) & 1
                        nw = (wb >> a) & (wb >> i) & 1
                    if ns != (ps >> i) & 1 or nw != (pw >> i) & 1:
                        ok = False
                        break
                if not ok:
                    continue
            yield sb, wb

    # -- debug export -------------------------------------------------------

    def to_dot(self, max_atoms: int = 8) -> str:
        """Reachable fragment over fully resolved letters, as a DOT graph.
        Traversal is capped to alphabets of at most `max_atoms` names (the
        letter fan-out is exponential in the alphabet)."""
        k = len(self.alphabet)
        if k > max_atoms:
            raise ValueError(
                f"letter alphabet has {k} names; DOT export enumerates "
                f"2^{k} letters per state, raise max_atoms to force it")
        letters = [BackboneLetter(bits, bits) for bits in range(1 << k)]
        seen = {self.initial}
        frontier = [self.initial]
        edges: list[tuple[int, int, int]] = []
        while frontier:
            src = frontier.pop()
            if self.is_accepting(src):
                continue  # sink; self-loops omitted from the export
            for letter in letters:
                dst = self.step(src, letter)
                edges.append((src, letter.strong, dst))
                if dst not in seen:
                    seen.add(dst)
                    frontier.append(dst)
        lines = [f"digraph {self.mode} {{"]
        lines.append(f'  // backbone: {to_text(self.formula)}')
        lines.append(f"  // reachable states: {len(seen)}")
        for sid in sorted(seen):
            shape = "doublecircle" if self.is_accepting(sid) else "circle"
            lines.append(f'  s{sid} [shape={shape}];')
        grouped: dict[tuple[int, int], list[int]] = {}
        for src, bits, dst in edges:
            grouped.setdefault((src, dst), []).append(bits)
        for (src, dst), many in sorted(grouped.items()):
            label = ",".join(self._letter_name(bits) for bits in many)
            lines.append(f'  s{src} -> s{dst} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines)

    def _letter_name(self, bits: int) -> str:
        on = [name for i, name in enumerate(self.alphabet) if (bits >> i) & 1]
        return "{" + " ".join(on) + "}"


# ---------------------------------------------------------------------------
# incremental evaluation of pure-past backbone parts

def _is_pure_past(g: Formula) -> bool:
    for s in subformulas(g):
        boolean = isinstance(s, (TrueF, FalseF, Atom, Not, And, Or))
        past = isinstance(s, Since) and s.ivl == FULL or (
            isinstance(s, Historically) and s.ivl == FULL)
        if not (boolean or past):
            return False
    return True


class PastRegistry:
    """One-step recurrence evaluator for the pure-past backbone subformulas,
    exposed to the acceptors as extra letter positions.

    The registry state after n letters is a pair of bit masks holding each
    registered subformula node's value pair at letter n; `step` is the only
    way to advance it, so the value at n depends on letters 0..n alone.
    """

    def __init__(self, base_alphabet: tuple[str, ...],
                 entries: tuple[tuple[str, Formula], ...]):
        self.base_alphabet = base_alphabet
        self.entries = entries
        self.alphabet = base_alphabet + tuple(name for name, _ in entries)
        alpha_index = {name: i for i, name in enumerate(base_alphabet)}
        merged: Formula = TrueF()
        for _, g in entries:
            merged = And(merged, g)
        self._nodes, _, _ = _compile_backbone(merged, alpha_index)
        index = {g: i for i, g in enumerate(subformulas(merged))}
        self._roots = tuple(index[g] for _, g in entries)

    def initial_state(self):
        return None

    def step(self, state, letter: BackboneLetter
             ) -> tuple[object, BackboneLetter]:
        """Advance past one letter over the base alphabet; returns the new
        state and the letter extended with the registered values."""
        ls, lw = letter.strong, letter.weak
        if state is None:
            ps = pw = 0
            first = True
        else:
            ps, pw = state
            first = False
        sb = wb = 0
        for i, (tag, a, b) in enumerate(self._nodes):
            if tag == _ATOM:
                s = (ls >> a) & 1
                w = (lw >> a) & 1
            elif tag == _NOT:
                s = 1 ^ ((wb >> a) & 1)
                w = 1 ^ ((sb >> a) & 1)
            elif tag == _AND:
                s = (sb >> a) & (sb >> b) & 1
                w = (wb >> a) & (wb >> b) & 1
            elif tag == _OR:
                s = ((sb >> a) | (sb >> b)) & 1
                w = ((wb >> a) | (wb >> b)) & 1
            elif tag == _TRUE:
                s = w = 1
            elif tag == _FALSE:
                s = w = 0
            elif tag == _SIN:
                if first:
                    s = w = 0
                else:
                    s = ((ps >> b) | ((ps >> a) & (ps >> i))) & 1
                    w = ((pw >> b) | ((pw >> a) & (pw >> i))) & 1
            elif tag == _HIS:
                if first:
                    s = w = 1
                else:
                    s = (ps >> a) & (ps >> i) & 1
                    w = (pw >> a) & (pw >> i) & 1
            else:
                raise AssertionError("future node in a past registry")
            sb |= s << i
            wb |= w << i
        base = len(self.base_alphabet)
        for t, r in enumerate(self._roots):
            ls |= ((sb >> r) & 1) << (base + t)
            lw |= ((wb >> r) & 1) << (base + t)
        return (sb, wb), BackboneLetter(ls, lw)


def _fresh_names(count: int, taken: set[str]) -> list[str]:
    out = []
    i = 1
    while len(out) < count:
        name = f"Z{i}"
        while name in taken:
            name += "_"
        taken.add(name)
        out.append(name)
        i += 1
    return out


def build(phi: Formula, state_budget: int = DEFAULT_STATE_BUDGET
          ) -> tuple[PrefixDFA, PrefixDFA, PastRegistry]:
    """Compile a backbone into its two certificate acceptors.

    Maximal pure-past temporal subformulas are handed to a PastRegistry and
    replaced by fresh letter names, so the profile automata guess only
    genuinely open futures.  Both acceptors read letters over
    `registry.alphabet` (base names first, registered names after).
    """
    base = tuple(sorted({g.name for g in subformulas(phi)
                         if isinstance(g, Atom)}))
    found: dict[Formula, None] = {}

    def hoist(g: Formula) -> None:
        if isinstance(g, (Since, Historically)) and g.ivl == FULL \
                and _is_pure_past(g):
            found.setdefault(g, None)
            return
        for kid in children(g):
            hoist(kid)

    hoist(phi)
    entries_f = list(found)
    names = _fresh_names(len(entries_f), set(base))
    rename = {g: Atom(n) for g, n in zip(entries_f, names)}

    def replace(g: Formula) -> Formula:
        if g in rename:
            return rename[g]
        return with_children(g, tuple(replace(k) for k in children(g)))

    phi2 = replace(phi)
    registry = PastRegistry(base, tuple(zip(names, entries_f)))
    good = PrefixDFA(phi2, registry.alphabet, "good", state_budget)
    bad = PrefixDFA(phi2, registry.alphabet, "bad", state_budget)
    return good, bad, registry
