"""Formula AST and parser for the safety fragment (atoms, next, and, always)."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class AtomicProposition:
    """Half-space label ``normal · y <= offset`` on the output."""

    name: str
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.atleast_1d(np.asarray(self.normal, dtype=float))
        if not np.any(normal):
            raise ValueError(f"atomic proposition {self.name!r} has a zero normal")
        normal.flags.writeable = False
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    def __eq__(self, other):
        return (
            isinstance(other, AtomicProposition)
            and self.name == other.name
            and np.array_equal(self.normal, other.normal)
            and self.offset == other.offset
        )

    def __hash__(self):
        return hash((self.name, self.normal.tobytes(), self.offset))

    def holds(self, y):
        return float(self.normal @ np.atleast_1d(y)) <= self.offset


class Formula:
    """Base class of AST nodes."""

    def __and__(self, other):
        return And(self, other)


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Atom(Formula):
    ap: AtomicProposition

    def __str__(self):
        return self.ap.name


@dataclass(frozen=True)
class Letter(Formula):
    """Named conjunction of atomic propositions (a letter of the labelling)."""

    name: str
    atoms: tuple

    def __post_init__(self):
        if not self.atoms:
            raise ValueError(f"letter {self.name!r} needs at least one atomic proposition")
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula

    def __str__(self):
        return f"X {_wrap(self.arg)}"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"{self.left} & {self.right}"


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula

    def __str__(self):
        return f"G {_wrap(self.arg)}"


@dataclass(frozen=True)
class BoundedAlways(Formula):
    k: int
    arg: Formula

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("bounded-always horizon must be nonnegative")

    def __str__(self):
        return f"G[{self.k}] {_wrap(self.arg)}"


def _wrap(phi):
    return f"({phi})" if isinstance(phi, And) else str(phi)


def next_power(phi, k):
    for _ in range(k):
        phi = Next(phi)
    return phi


def conjunction(parts):
    parts = list(parts)
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def conjuncts(phi):
    if isinstance(phi, And):
        return conjuncts(phi.left) + conjuncts(phi.right)
    if isinstance(phi, Top):
        return []
    return [phi]


def expand_bounded(phi):
    """Replace every ``G[k] f`` by ``f & X f & ... & X^k f``."""
    if isinstance(phi, BoundedAlways):
        inner = expand_bounded(phi.arg)
        return conjunction(next_power(inner, i) for i in range(phi.k + 1))
    if isinstance(phi, Next):
        return Next(expand_bounded(phi.arg))
    if isinstance(phi, And):
        return And(expand_bounded(phi.left), expand_bounded(phi.right))
    if isinstance(phi, Always):
        return Always(expand_bounded(phi.arg))
    return phi


def horizon(phi):
    """Number of future steps the formula looks at (inf under an unbounded always)."""
    if isinstance(phi, (Atom, Letter, Top)):
        return 0
    if isinstance(phi, Next):
        return 1 + horizon(phi.arg)
    if isinstance(phi, And):
        return max(horizon(phi.left), horizon(phi.right))
    if isinstance(phi, BoundedAlways):
        return phi.k + horizon(phi.arg)
    if isinstance(phi, Always):
        return math.inf
    raise TypeError(f"not a formula: {phi!r}")


def atomic_propositions(phi):
    """All atomic propositions occurring in the formula, in first-seen order."""
    out = []

    def visit(f):
        if isinstance(f, Atom):
            aps = [f.ap]
        elif isinstance(f, Letter):
            aps = list(f.atoms)
        elif isinstance(f, (Next, Always, BoundedAlways)):
            return visit(f.arg)
        elif isinstance(f, And):
            visit(f.left)
            return visit(f.right)
        else:
            return
        for ap in aps:
            if ap not in out:
                out.append(ap)

    visit(phi)
    return out


# -- parser ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<bounded>G\s*\[\s*(?P<k>[^\]]*)\])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>->|<->|[&()!|~]))"
)
_UNSUPPORTED_WORDS = {"U", "R", "W", "F", "M"}
_UNSUPPORTED_SYMBOLS = {"!", "|", "~", "->", "<->"}
_KEYWORDS = {"X", "G", "true"} | _UNSUPPORTED_WORDS


def _tokenize(text):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group("bounded"):
            k = m.group("k").strip()
            if not k.isdigit():
                raise ParseError(f"bounded always needs a nonnegative integer, got {k!r}", start)
            tokens.append(("bounded", int(k), start))
        elif m.group("ident"):
            tokens.append(("ident", m.group("ident"), start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text, table):
        self.tokens = _tokenize(text)
        self.i = 0
        self.table = table

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def conjunction(self):
        left = self.unary()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "&":
                self.take()
                left = And(left, self.unary())
            elif (kind == "op" and val in _UNSUPPORTED_SYMBOLS) or (
                kind == "ident" and val in _UNSUPPORTED_WORDS
            ):
                raise ParseError(f"unsupported operator {val!r}", pos)
            else:
                return left

    def unary(self):
        kind, val, pos = self.take()
        if kind == "bounded":
            return BoundedAlways(val, self.unary())
        if kind == "ident":
            if val == "X":
                return Next(self.unary())
            if val == "G":
                return Always(self.unary())
            if val == "true":
                return Top()
            if val in _UNSUPPORTED_WORDS:
                raise ParseError(f"unsupported operator {val!r}", pos)
            if val not in self.table:
                raise ParseError(f"unknown atomic proposition {val!r}", pos)
            label = self.table[val]
            return label if isinstance(label, Letter) else Atom(label)
        if kind == "op":
            if val == "(":
                inner = self.conjunction()
                kind2, val2, pos2 = self.take()
                if not (kind2 == "op" and val2 == ")"):
                    raise ParseError("expected ')'", pos2)
                return inner
            if val in _UNSUPPORTED_SYMBOLS:
                raise ParseError(f"unsupported operator {val!r}", pos)
            raise ParseError(f"unexpected {val!r}", pos)
        raise ParseError("unexpected end of formula", pos)


def parse(text, labels):
    """Parse formula text; ``labels`` are AtomicProposition or Letter objects."""
    table = {}
    for lab in labels:
        if lab.name in _KEYWORDS:
            raise ParseError(f"label name {lab.name!r} is a reserved keyword")
        table[lab.name] = lab
    p = _Parser(text, table)
    phi = p.conjunction()
    kind, val, pos = p.peek()
    if kind != "end":
        if kind == "op" and val == ")":
            raise ParseError("unbalanced ')'", pos)
        raise ParseError(f"unexpected {val!r}", pos)
    return phi
