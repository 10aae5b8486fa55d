"""CTL formulas over Petri-net markings: syntax tree, parser, printer, normal form.

Atomic propositions are comparisons between marking terms ``m(place)`` and
integer literals, plus the constants ``true``/``false``.  Every formula can
be rewritten to the basis {atomic, !, |, EX, EG, EU} by :func:`normalize`.

Concrete syntax (``[ ]`` and ``( )`` are interchangeable)::

    state := atom | "!" state | state "&" state | state "|" state
           | ("AX"|"EX"|"AF"|"EF"|"AG"|"EG") state
           | ("A"|"E") "[" state "U" state "]"
    atom  := "true" | "false" | term cmp term
    term  := "m(" ident ")" | integer
    cmp   := "=" | "!=" | "<" | "<=" | ">" | ">="

Binding strength, tightest first: unary operators (``!`` and the temporal
ones), ``&``, ``|``.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass, field
from typing import Sequence, Union


class FormulaError(Exception):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


class ConfigurationError(FormulaError):
    """A predicate mentions a place the model does not have."""


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Place:
    name: str
    index: int | None = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"m({self.name})"


Term = Union[Place, int]


class Atomic(Formula):
    __slots__ = ()


@dataclass(frozen=True, eq=True)
class Const(Atomic):
    value: bool


@dataclass(frozen=True)
class Compare(Atomic):
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class AX(Formula):
    operand: Formula


@dataclass(frozen=True)
class EX(Formula):
    operand: Formula


@dataclass(frozen=True)
class AF(Formula):
    operand: Formula


@dataclass(frozen=True)
class EF(Formula):
    operand: Formula


@dataclass(frozen=True)
class AG(Formula):
    operand: Formula


@dataclass(frozen=True)
class EG(Formula):
    operand: Formula


@dataclass(frozen=True)
class AU(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class EU(Formula):
    left: Formula
    right: Formula


TRUE = Const(True)
FALSE = Const(False)

UNARY_TEMPORAL = {"AX": AX, "EX": EX, "AF": AF, "EF": EF, "AG": AG, "EG": EG}
BINARY_TEMPORAL = {"A": AU, "E": EU}
BASIS = (Const, Compare, Not, Or, EX, EG, EU)

COMPARATORS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
_CMP_ALIASES = {"==": "=", "≠": "!=", "≤": "<=", "≥": ">=", "<>": "!="}


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Atomic):
        return ()
    if isinstance(f, (And, Or, AU, EU)):
        return (f.left, f.right)
    return (f.operand,)


def subformulas(f: Formula) -> list[Formula]:
    """Post-order list of distinct subformulas (operands before operators)."""
    seen: dict[Formula, None] = {}

    def walk(g: Formula) -> None:
        if g in seen:
            return
        for c in children(g):
            walk(c)
        seen[g] = None

    walk(f)
    return list(seen)


def depth(f: Formula) -> int:
    kids = children(f)
    return 0 if not kids else 1 + max(depth(c) for c in kids)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<cmp><=|>=|!=|==|<>|[=<>≠≤≥])
  | (?P<op>[!&|()\[\]¬∧∨])
    """,
    re.VERBOSE,
)
_OP_ALIASES = {"¬": "!", "∧": "&", "∨": "|"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group()
        if kind == "cmp":
            value = _CMP_ALIASES.get(value, value)
        elif kind == "op":
            value = _OP_ALIASES.get(value, value)
        if kind != "ws":
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


_OPEN = {"(": ")", "[": "]"}
_KEYWORDS = set(UNARY_TEMPORAL) | {"A", "E", "U"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        found = tok[1] or "end of input"
        raise FormulaSyntaxError(f"{message}, found {found!r}", tok[2], self.text)

    def expect(self, value: str):
        tok = self.next()
        if tok[1] != value:
            self.i -= 1
            self.fail(f"expected {value!r}")
        return tok

    def parse(self) -> Formula:
        f = self.disjunction()
        if self.peek()[0] != "eof":
            self.fail("unexpected token")
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek()[1] == "|":
            self.next()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek()[1] == "&":
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, value, pos = self.peek()
        if value == "!":
            self.next()
            return Not(self.unary())
        if kind == "ident" and value in UNARY_TEMPORAL:
            self.next()
            return UNARY_TEMPORAL[value](self.unary())
        if kind == "ident" and value in BINARY_TEMPORAL:
            self.next()
            opener = self.next()
            if opener[1] not in _OPEN:
                self.i -= 1
                self.fail(f"expected '[' after {value}")
            left = self.disjunction()
            self.expect("U")
            right = self.disjunction()
            self.expect(_OPEN[opener[1]])
            return BINARY_TEMPORAL[value](left, right)
        return self.primary()

    def primary(self) -> Formula:
        kind, value, pos = self.peek()
        if value in _OPEN:
            self.next()
            f = self.disjunction()
            self.expect(_OPEN[value])
            return f
        if kind == "ident" and value.lower() in ("true", "false"):
            self.next()
            return Const(value.lower() == "true")
        if kind == "ident" and value in _KEYWORDS:
            self.fail("unknown operator" if value == "U" else "missing operand")
        if kind == "eof":
            self.fail("missing operand")
        left = self.term()
        op = self.next()
        if op[0] != "cmp":
            self.i -= 1
            self.fail("expected comparison operator")
        right = self.term()
        return Compare(op[1], left, right)

    def term(self) -> Term:
        kind, value, pos = self.next()
        if kind == "num":
            return int(value)
        if kind == "ident" and value == "m":
            self.expect("(")
            name = self.next()
            if name[0] != "ident":
                self.i -= 1
                self.fail("expected place name")
            self.expect(")")
            return Place(name[1])
        self.i -= 1
        if kind == "ident":
            self.fail("unknown operator")
        self.fail("expected a term m(place) or an integer")


def parse(text: str) -> Formula:
    return _Parser(text).parse()


# --------------------------------------------------------------- printing

def _term_text(t: Term) -> str:
    return str(t)


def to_text(f: Formula) -> str:
    """Fully bracketed concrete syntax; ``parse(to_text(f)) == f``."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Compare):
        return f"{_term_text(f.left)} {f.op} {_term_text(f.right)}"
    if isinstance(f, Not):
        return f"!({to_text(f.operand)})"
    if isinstance(f, And):
        return f"({to_text(f.left)} & {to_text(f.right)})"
    if isinstance(f, Or):
        return f"({to_text(f.left)} | {to_text(f.right)})"
    if isinstance(f, (AU, EU)):
        q = "A" if isinstance(f, AU) else "E"
        return f"{q}[{to_text(f.left)} U {to_text(f.right)}]"
    return f"{type(f).__name__}({to_text(f.operand)})"


# ---------------------------------------------------------- normalization

def neg(f: Formula) -> Formula:
    return f.operand if isinstance(f, Not) else Not(f)


def normalize(f: Formula) -> Formula:
    """Rewrite ``f`` over {atomic, !, |, EX, EG, EU}, dropping double negations."""
    if isinstance(f, Atomic):
        return f
    if isinstance(f, Not):
        return neg(normalize(f.operand))
    if isinstance(f, Or):
        return Or(normalize(f.left), normalize(f.right))
    if isinstance(f, And):
        return _and(normalize(f.left), normalize(f.right))
    if isinstance(f, EX):
        return EX(normalize(f.operand))
    if isinstance(f, EG):
        return EG(normalize(f.operand))
    if isinstance(f, EU):
        return EU(normalize(f.left), normalize(f.right))
    if isinstance(f, AX):
        return neg(EX(neg(normalize(f.operand))))
    if isinstance(f, EF):
        return EU(TRUE, normalize(f.operand))
    if isinstance(f, AF):
        return neg(EG(neg(normalize(f.operand))))
    if isinstance(f, AG):
        return neg(EU(TRUE, neg(normalize(f.operand))))
    if isinstance(f, AU):
        phi, psi = normalize(f.left), normalize(f.right)
        not_psi = neg(psi)
        stuck = EU(not_psi, _and(neg(phi), not_psi))
        return _and(neg(stuck), neg(EG(not_psi)))
    raise TypeError(f"not a formula: {f!r}")


def _and(a: Formula, b: Formula) -> Formula:
    return neg(Or(neg(a), neg(b)))


def is_normal(f: Formula) -> bool:
    return all(isinstance(g, BASIS) for g in subformulas(f))


# ------------------------------------------------------ atomic predicates

def _resolve_term(t: Term, index: dict[str, int]) -> Term:
    if isinstance(t, Place):
        try:
            return Place(t.name, index[t.name])
        except KeyError:
            raise ConfigurationError(f"unknown place {t.name!r}") from None
    return t


def resolve(f: Formula, place_names: Sequence[str]) -> Formula:
    """Bind every ``m(place)`` in ``f`` to its marking index."""
    index = {name: i for i, name in enumerate(place_names)}
    cache: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        if g in cache:
            return cache[g]
        if isinstance(g, Compare):
            out = Compare(g.op, _resolve_term(g.left, index), _resolve_term(g.right, index))
        elif isinstance(g, Const):
            out = g
        elif isinstance(g, (And, Or, AU, EU)):
            out = type(g)(go(g.left), go(g.right))
        else:
            out = type(g)(go(g.operand))
        cache[g] = out
        return out

    return go(f)


def _term_value(t: Term, marking: Sequence[int]) -> int:
    if isinstance(t, Place):
        if t.index is None:
            raise ConfigurationError(f"place {t.name!r} used before resolve()")
        return marking[t.index]
    return t


def holds(p: Atomic, marking: Sequence[int], is_error: bool = False) -> bool:
    if isinstance(p, Const):
        return p.value
    if is_error:
        return False
    return COMPARATORS[p.op](_term_value(p.left, marking), _term_value(p.right, marking))


def eval_atomic(p: Atomic, s) -> bool:
    """Truth of atomic ``p`` in state record ``s``.

    Marking comparisons are false on the error state; the constants keep
    their value everywhere so that ``true`` denotes the whole state space.
    """
    return holds(p, s.marking, s.is_error)
