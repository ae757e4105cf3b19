"""Concrete syntax: tokenizer, recursive-descent parser, pretty-printer.

Operator spellings: `true false not and or ->`, binary `U S Uw Sw GU GS`,
unary `F G O H X`.  A temporal operator takes an optional interval suffix:
`U[2,3)`, `F<3`, `F<=3`, `G=1`, `S(1/2,inf)`; omitted means `(0,inf)`.
Generalized operators carry their anchor offset first: `GU{c=1}(2,inf)`.
Precedence, loosest first: `->` (right-assoc), `or`, `and`, temporal
binaries (right-assoc), unary operators.  The printer emits the same
grammar with minimal parentheses, so parse(print(f)) == f structurally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .formulas import (
    FALSE, TRUE, And, Atom, Eventually, Formula, GSince, GUntil, Historically,
    Implies, Next, Not, Once, Or, Since, TrueF, Until, WeakSince, WeakUntil,
    Always,
)
from .intervals import FULL, Interval, interval, rat

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym><=|->|[()\[\]{},<=]))"
)

_KEYWORDS = {
    "true", "false", "not", "and", "or", "inf",
    "U", "S", "Uw", "Sw", "GU", "GS", "F", "G", "O", "H", "X",
}

_UNARY = {
    "F": Eventually, "G": Always, "O": Once, "H": Historically, "X": Next,
}

_BINARY = {"U": Until, "S": Since, "Uw": WeakUntil, "Sw": WeakSince}


class ParseError(ValueError):
    """Syntax or well-formedness error, carrying the source offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'num', 'id', 'sym', 'end'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            stripped = text[i:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}",
                             len(text) - len(stripped))
        if m.lastgroup is None:
            break
        toks.append(_Tok(m.lastgroup, m.group(m.lastgroup),
                         m.end() - len(m.group(m.lastgroup))))
        i = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.cur.text != text:
            raise ParseError(f"expected {text!r}, found {self.cur.text!r}",
                             self.cur.pos)
        return self.advance()

    def parse(self) -> Formula:
        f = self.implication()
        if self.cur.kind != "end":
            raise ParseError(f"trailing input {self.cur.text!r}", self.cur.pos)
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.cur.text == "->":
            self.advance()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.cur.text == "or":
            self.advance()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.temporal()
        while self.cur.text == "and":
            self.advance()
            f = And(f, self.temporal())
        return f

    def temporal(self) -> Formula:
        left = self.unary()
        tok = self.cur
        if tok.kind != "id" or tok.text not in ("U", "S", "Uw", "Sw", "GU", "GS"):
            return left
        self.advance()
        if tok.text in ("GU", "GS"):
            c = self.anchor()
            ivl = self.maybe_interval(tok.pos)
            right = self.temporal()
            cls = GUntil if tok.text == "GU" else GSince
            return self.checked(cls, tok.pos, ivl, c, left, right)
        ivl = self.maybe_interval(tok.pos)
        right = self.temporal()
        return self.checked(_BINARY[tok.text], tok.pos, ivl, left, right)

    def unary(self) -> Formula:
        tok = self.cur
        if tok.text == "not":
            self.advance()
            return Not(self.unary())
        if tok.kind == "id" and tok.text in _UNARY:
            self.advance()
            ivl = self.maybe_interval(tok.pos)
            return self.checked(_UNARY[tok.text], tok.pos, ivl, self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.advance()
        if tok.text == "(":
            f = self.implication()
            self.expect(")")
            return f
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        if tok.kind == "id" and tok.text not in _KEYWORDS:
            return Atom(tok.text)
        raise ParseError(f"expected a formula, found {tok.text!r}", tok.pos)

    def anchor(self) -> Fraction:
        self.expect("{")
        name = self.advance()
        if name.text != "c":
            raise ParseError(f"expected 'c', found {name.text!r}", name.pos)
        self.expect("=")
        value = self.number()
        self.expect("}")
        return value

    def number(self) -> Fraction:
        tok = self.advance()
        if tok.kind != "num":
            raise ParseError(f"expected a number, found {tok.text!r}", tok.pos)
        return rat(tok.text)

    def maybe_interval(self, op_pos: int) -> Interval:
        tok = self.cur
        if tok.text == "<":
            self.advance()
            return self.checked(interval, op_pos, 0, self.number())
        if tok.text == "<=":
            self.advance()
            return self.checked(interval, op_pos, 0, self.number(), True, False)
        if tok.text == "=":
            self.advance()
            x = self.number()
            return self.checked(interval, op_pos, x, x, False, False)
        if tok.text == "[" or (tok.text == "(" and self.toks[self.i + 1].kind == "num"):
            lo_open = self.advance().text == "("
            lo = self.number()
            self.expect(",")
            if self.cur.text == "inf":
                self.advance()
                hi = None
            else:
                hi = self.number()
            close = self.advance()
            if close.text not in (")", "]"):
                raise ParseError(f"expected ')' or ']', found {close.text!r}",
                                 close.pos)
            return self.checked(interval, op_pos, lo, hi, lo_open, close.text == ")")
        return FULL

    def checked(self, ctor, pos: int, *args):
        # Interval/formula invariant violations surface as parse errors here.
        try:
            return ctor(*args)
        except ValueError as exc:
            raise ParseError(str(exc), pos) from None


def parse(text: str) -> Formula:
    return _Parser(text).parse()


# Printer precedence levels, loosest first.
_LVL_IMPLIES, _LVL_OR, _LVL_AND, _LVL_TEMPORAL, _LVL_UNARY = range(5)

_UNARY_NAMES = {
    Eventually: "F", Always: "G", Once: "O", Historically: "H", Next: "X",
}

_BINARY_NAMES = {Until: "U", Since: "S", WeakUntil: "Uw", WeakSince: "Sw"}


def _ivl_text(ivl: Interval) -> str:
    if ivl == FULL:
        return ""
    if ivl.lo == 0 and ivl.lo_open and ivl.is_bounded:
        return f"<{ivl.hi}" if ivl.hi_open else f"<={ivl.hi}"
    if ivl.is_singular:
        return f"={ivl.lo}"
    lb = "(" if ivl.lo_open else "["
    rb = ")" if ivl.hi_open else "]"
    return f"{lb}{ivl.lo},{ivl.hi}{rb}"


def to_text(f: Formula) -> str:
    return _print(f, _LVL_IMPLIES)


def _print(f: Formula, level: int) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, (And, Or, Implies)):
        if isinstance(f, Implies):
            mine, name = _LVL_IMPLIES, "->"
            left = _print(f.left, mine + 1)
            right = _print(f.right, mine)
        else:
            mine = _LVL_OR if isinstance(f, Or) else _LVL_AND
            name = "or" if isinstance(f, Or) else "and"
            left = _print(f.left, mine)
            right = _print(f.right, mine + 1)
        out = f"{left} {name} {right}"
        return f"({out})" if level > mine else out
    if type(f) in _BINARY_NAMES:
        op = _BINARY_NAMES[type(f)] + _ivl_text(f.ivl)
        out = f"{_print(f.left, _LVL_UNARY)} {op} {_print(f.right, _LVL_TEMPORAL)}"
        return f"({out})" if level > _LVL_TEMPORAL else out
    if isinstance(f, (GUntil, GSince)):
        name = "GU" if isinstance(f, GUntil) else "GS"
        op = f"{name}{{c={f.c}}}{_ivl_text(f.ivl)}"
        out = f"{_print(f.left, _LVL_UNARY)} {op} {_print(f.right, _LVL_TEMPORAL)}"
        return f"({out})" if level > _LVL_TEMPORAL else out
    if isinstance(f, Not):
        return f"not {_print(f.arg, _LVL_UNARY)}"
    if type(f) in _UNARY_NAMES:
        op = _UNARY_NAMES[type(f)] + _ivl_text(f.ivl)
        return f"{op} {_print(f.arg, _LVL_UNARY)}"
    if isinstance(f, TrueF):
        return "true"
    return "false"
