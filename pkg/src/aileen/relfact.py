"""Ground relational facts, cases, patterns and their s-expression syntax.

A fact is a predicate applied to one to three terms. Terms are entities
(``o1``, ``T0``), constants (``CVRed``), pattern variables (``?o``),
generalized entities (``(GenEntFn 0 0 RRedMt)``), inferred skolems
(``(:skolem ...)``) or nested facts (only under ``holdsIn``-style wrappers,
max depth two).

    >>> case = parse_case("(isa o1 CVBlue) (H T1 (held O1))")
    >>> print(render_case(case))
    (holdsIn T1 (held o1))
    (isa o1 CVBlue)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import FactParseError, UnboundVariableError

PREDICATE_ALIASES = {"H": "holdsIn"}
MAX_DEPTH = 2
_ENTITY_RE = re.compile(r"^[A-Za-z]+[0-9]+$")
_EPISODE_RE = re.compile(r"^[tT][0-9]+$")


@dataclass(frozen=True, slots=True)
class Entity:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True, slots=True)
class GenEnt:
    """Abstract entity owned by one generalization of a context."""

    gen: int
    index: int
    context: str

    def __str__(self) -> str:
        return f"(GenEntFn {self.gen} {self.index} {self.context})"


@dataclass(frozen=True, slots=True)
class Skolem:
    """Base entity carried into a candidate inference without a counterpart."""

    of: "Term"

    def __str__(self) -> str:
        return f"(:skolem {self.of})"


class Fact:
    """Immutable predicate application; hashable by value."""

    __slots__ = ("pred", "args", "_hash", "_text")

    def __init__(self, pred: str, args: Iterable["Term"]):
        args = tuple(args)
        if not 1 <= len(args) <= 3:
            raise ValueError(f"arity of {pred} must be 1..3, got {len(args)}")
        object.__setattr__(self, "pred", PREDICATE_ALIASES.get(pred, pred))
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash((self.pred, args)))
        object.__setattr__(self, "_text", None)

    def __setattr__(self, key, value):
        raise AttributeError("Fact is immutable")

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Fact):
            return NotImplemented
        return self._hash == other._hash and self.pred == other.pred and self.args == other.args

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        text = self._text
        if text is None:
            text = "(" + " ".join([self.pred] + [str(a) for a in self.args]) + ")"
            object.__setattr__(self, "_text", text)
        return text

    def __repr__(self) -> str:
        return f"Fact{self}"

    def __lt__(self, other: "Fact") -> bool:
        return str(self) < str(other)

    def __reduce__(self):
        return (Fact, (self.pred, self.args))

    @property
    def depth(self) -> int:
        return 1 + max((a.depth for a in self.args if isinstance(a, Fact)), default=0)


Term = Union[Entity, Const, Var, GenEnt, Skolem, Fact]
EntityLike = (Entity, GenEnt, Skolem)
Binding = dict


def fact(pred: str, *args) -> Fact:
    """Build a fact, reading bare strings with the parser's atom rules."""
    return Fact(pred, [a if not isinstance(a, str) else atom(a) for a in args])


def atom(token: str) -> Term:
    if token.startswith("?"):
        return Var(token[1:])
    if _ENTITY_RE.match(token):
        return Entity(normalize_entity(token))
    return Const(token)


def normalize_entity(name: str) -> str:
    # o1/O1 name the same object; episodes keep the T prefix
    if _EPISODE_RE.match(name):
        return "T" + name[1:]
    return name.lower()


def entities_of(term) -> Iterator:
    """Yield entity-like terms of a fact in argument order (with repeats)."""
    if isinstance(term, Fact):
        for a in term.args:
            yield from entities_of(a)
    elif isinstance(term, EntityLike):
        yield term


def variables_of(term) -> Iterator[Var]:
    if isinstance(term, Fact):
        for a in term.args:
            yield from variables_of(a)
    elif isinstance(term, Var):
        yield term


def constants_of(term) -> Iterator[str]:
    if isinstance(term, Fact):
        yield term.pred
        for a in term.args:
            yield from constants_of(a)
    elif isinstance(term, Const):
        yield term.name


def is_ground(term) -> bool:
    return next(variables_of(term), None) is None


def mentions(f: Fact, symbol: str) -> bool:
    return symbol in constants_of(f)


class Case:
    """A finite set of ground facts with an optional concept label."""

    __slots__ = ("facts", "label")

    def __init__(self, facts: Iterable[Fact] = (), label: str | None = None):
        facts = frozenset(facts)
        for f in facts:
            if not is_ground(f):
                raise ValueError(f"case facts must be ground: {f}")
        self.facts = facts
        self.label = label

    def __iter__(self):
        return iter(sorted(self.facts, key=str))

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, f) -> bool:
        return f in self.facts

    def __eq__(self, other) -> bool:
        if not isinstance(other, Case):
            return NotImplemented
        return self.facts == other.facts and self.label == other.label

    def __hash__(self) -> int:
        return hash((self.facts, self.label))

    def __repr__(self) -> str:
        return f"Case({len(self.facts)} facts, label={self.label!r})"

    def with_fact(self, f: Fact) -> "Case":
        if f in self.facts:
            return self
        return Case(self.facts | {f}, self.label)

    def union(self, other: Iterable[Fact]) -> "Case":
        return Case(self.facts | frozenset(other), self.label)

    def entities(self) -> set:
        out = set()
        for f in self.facts:
            out.update(entities_of(f))
        return out

    def about(self, *entities) -> "Case":
        """Facts whose entities all lie within ``entities``."""
        keep = set(entities)
        return Case((f for f in self.facts if set(entities_of(f)) <= keep), self.label)


# ---------------------------------------------------------------- matching


def pattern_match(pattern: Fact, f: Fact, binding: dict | None = None) -> dict | None:
    """Bind ``pattern``'s variables so that it equals ``f``; None on mismatch.

    Variables bind to concrete entities only.
    """
    out = dict(binding) if binding else {}
    return out if _match(pattern, f, out) else None


def _match(p, t, out: dict) -> bool:
    if isinstance(p, Var):
        if not isinstance(t, Entity):
            return False
        prev = out.get(p)
        if prev is None:
            out[p] = t
            return True
        return prev == t
    if isinstance(p, Fact):
        if not isinstance(t, Fact) or p.pred != t.pred or len(p.args) != len(t.args):
            return False
        return all(_match(a, b, out) for a, b in zip(p.args, t.args))
    return p == t


def substitute(f, binding: dict):
    if isinstance(f, Var):
        try:
            return binding[f]
        except KeyError:
            raise UnboundVariableError(f"unbound variable {f}") from None
    if isinstance(f, Fact):
        return Fact(f.pred, [substitute(a, binding) for a in f.args])
    return f


def rename(f, mapping: dict):
    """Replace entity-like terms through ``mapping`` (missing keys kept)."""
    if isinstance(f, Fact):
        return Fact(f.pred, [rename(a, mapping) for a in f.args])
    return mapping.get(f, f)


# ---------------------------------------------------------------- syntax

_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def _tokenize(text: str):
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        tok = m.group(0)
        if not tok[0].isspace() and tok[0] != ";":
            yield tok, line, col
        elif tok.startswith("; label:"):
            yield ("#label", tok[len("; label:"):].strip()), line, col
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()


def _read(tokens, i: int):
    tok, line, col = tokens[i]
    if tok == ")":
        raise FactParseError("unexpected ')'", line, col)
    if tok != "(":
        return (tok, line, col), i + 1
    items = []
    i += 1
    while True:
        if i >= len(tokens):
            raise FactParseError("unclosed '('", line, col)
        if tokens[i][0] == ")":
            return (items, line, col), i + 1
        item, i = _read(tokens, i)
        items.append(item)


def _term(node, depth: int, arities: dict) -> Term:
    value, line, col = node
    if isinstance(value, str):
        return atom(value)
    if not value:
        raise FactParseError("empty expression", line, col)
    head = value[0][0]
    if not isinstance(head, str):
        raise FactParseError("expression head must be a symbol", line, col)
    if head == "GenEntFn":
        parts = [v[0] for v in value[1:]]
        try:
            if len(parts) == 2:
                return GenEnt(0, int(parts[0]), parts[1])
            if len(parts) == 3:
                return GenEnt(int(parts[0]), int(parts[1]), parts[2])
        except (TypeError, ValueError):
            pass
        raise FactParseError("malformed GenEntFn term", line, col)
    if head == ":skolem":
        if len(value) != 2:
            raise FactParseError(":skolem takes one term", line, col)
        return Skolem(_term(value[1], depth, arities))
    return _fact(node, depth + 1, arities)


def _fact(node, depth: int, arities: dict) -> Fact:
    value, line, col = node
    if isinstance(value, str):
        raise FactParseError(f"expected a fact, got atom {value!r}", line, col)
    if depth > MAX_DEPTH:
        raise FactParseError(f"nesting deeper than {MAX_DEPTH}", line, col)
    if not value or not isinstance(value[0][0], str):
        raise FactParseError("fact must start with a predicate symbol", line, col)
    pred = PREDICATE_ALIASES.get(value[0][0], value[0][0])
    args = [_term(v, depth, arities) for v in value[1:]]
    if not 1 <= len(args) <= 3:
        raise FactParseError(f"arity of {pred} must be 1..3", line, col)
    known = arities.setdefault(pred, len(args))
    if known != len(args):
        raise FactParseError(f"{pred} used with arity {len(args)} and {known}", line, col)
    return Fact(pred, args)


def parse_facts(text: str) -> list[Fact]:
    """Parse facts in order; patterns (facts with variables) are allowed."""
    return _parse(text)[0]


def _parse(text: str):
    tokens = []
    label = None
    for tok, line, col in _tokenize(text):
        if isinstance(tok, tuple):
            label = tok[1] or None
        else:
            tokens.append((tok, line, col))
    facts, arities, i = [], {}, 0
    while i < len(tokens):
        node, i = _read(tokens, i)
        facts.append(_fact(node, 1, arities))
    return facts, label


def parse_fact(text: str) -> Fact:
    facts = parse_facts(text)
    if len(facts) != 1:
        raise FactParseError(f"expected one fact, got {len(facts)}", 1, 1)
    return facts[0]


def parse_case(text: str) -> Case:
    facts, label = _parse(text)
    for f in facts:
        if not is_ground(f):
            raise FactParseError(f"variables not allowed in a case: {f}", 1, 1)
    return Case(facts, label)


def render_case(case: Case) -> str:
    lines = [f"; label: {case.label}"] if case.label else []
    lines.extend(sorted(str(f) for f in case.facts))
    return "\n".join(lines)
