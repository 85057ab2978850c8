"""Multi-modal formulas: hash-consed syntax trees, parser, printer and syntactic helpers.

Only six node kinds exist (Top, Bot, Prop, Not, Or, Diamond).  Conjunction,
implication and box are desugared on construction.  Nodes are interned, so
structural equality is object identity and hashing is O(1).
"""

from __future__ import annotations

import itertools
import re
import threading
from typing import Iterable, Iterator

TOP_OP, BOT_OP, PROP_OP, NOT_OP, OR_OP, DIA_OP = range(6)

RESERVED_PREFIX = "__atom_"
KEYWORDS = frozenset({"top", "bot"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_table: dict[tuple, "Formula"] = {}
_uids = itertools.count()
_lock = threading.Lock()


def _intern(cls, args: tuple) -> "Formula":
    key = (cls, *args)
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is None:
            node = object.__new__(cls)
            node._setup(*args)
            node.uid = next(_uids)
            node._sn = None
            node._depth = None
            node._disjuncts = None
            node._text = None
            _table[key] = node
    return node


def _check_name(name: str, what: str) -> str:
    if not isinstance(name, str) or not _IDENT.match(name) or name in KEYWORDS:
        raise ValueError(f"invalid {what} name: {name!r}")
    return name


class Formula:
    """Base class of all formula nodes.  Never instantiate directly."""

    __slots__ = ("uid", "_sn", "_depth", "_disjuncts", "_text")
    op: int = -1

    def _setup(self, *args) -> None:
        pass

    def _args(self) -> tuple:
        return ()

    def __hash__(self) -> int:
        return self.uid

    def __eq__(self, other) -> bool:
        return self is other

    def __reduce__(self):
        return (type(self), self._args())

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __repr__(self) -> str:
        return f"{type(self).__name__}({', '.join(map(repr, self._args()))})"

    def __str__(self) -> str:
        return render(self)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def children(self) -> tuple["Formula", ...]:
        return ()


class Top(Formula):
    __slots__ = ()
    op = TOP_OP

    def __new__(cls):
        return _intern(cls, ())


class Bot(Formula):
    __slots__ = ()
    op = BOT_OP

    def __new__(cls):
        return _intern(cls, ())


class Prop(Formula):
    __slots__ = ("name",)
    op = PROP_OP

    def __new__(cls, name: str):
        return _intern(cls, (_check_name(name, "proposition"),))

    def _setup(self, name):
        self.name = name

    def _args(self):
        return (self.name,)


class Not(Formula):
    __slots__ = ("inner",)
    op = NOT_OP

    def __new__(cls, inner: Formula):
        if not isinstance(inner, Formula):
            raise TypeError(f"expected Formula, got {type(inner).__name__}")
        return _intern(cls, (inner,))

    def _setup(self, inner):
        self.inner = inner

    def _args(self):
        return (self.inner,)

    def children(self):
        return (self.inner,)


class Or(Formula):
    __slots__ = ("left", "right")
    op = OR_OP

    def __new__(cls, left: Formula, right: Formula):
        if not isinstance(left, Formula) or not isinstance(right, Formula):
            raise TypeError("Or expects two formulas")
        return _intern(cls, (left, right))

    def _setup(self, left, right):
        self.left = left
        self.right = right

    def _args(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)


class Diamond(Formula):
    __slots__ = ("agent", "inner")
    op = DIA_OP

    def __new__(cls, agent: str, inner: Formula):
        if not isinstance(inner, Formula):
            raise TypeError(f"expected Formula, got {type(inner).__name__}")
        return _intern(cls, (_check_name(agent, "agent"), inner))

    def _setup(self, agent, inner):
        self.agent = agent
        self.inner = inner

    def _args(self):
        return (self.agent, self.inner)

    def children(self):
        return (self.inner,)


TOP = Top()
BOT = Bot()


def And(left: Formula, right: Formula) -> Formula:
    return Not(Or(Not(left), Not(right)))


def Implies(left: Formula, right: Formula) -> Formula:
    return Or(Not(left), right)


def Box(agent: str, inner: Formula) -> Formula:
    return Not(Diamond(agent, Not(inner)))


def _balanced(items: list[Formula], join) -> Formula:
    while len(items) > 1:
        paired = [join(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def conj(formulas: Iterable[Formula]) -> Formula:
    """Conjunction of a sequence; the empty conjunction is top."""
    items = [f for f in formulas if f is not TOP]
    if not items:
        return TOP
    if any(f is BOT for f in items):
        return BOT
    return _balanced(items, And)


def disj(formulas: Iterable[Formula]) -> Formula:
    """Disjunction of a sequence; the empty disjunction is bot."""
    items = [f for f in formulas if f is not BOT]
    if not items:
        return BOT
    if any(f is TOP for f in items):
        return TOP
    return _balanced(items, Or)


# Pattern views over the desugared forms.

def as_and(f: Formula) -> tuple[Formula, Formula] | None:
    if f.op == NOT_OP and f.inner.op == OR_OP:
        left, right = f.inner.left, f.inner.right
        if left.op == NOT_OP and right.op == NOT_OP:
            return left.inner, right.inner
    return None


def as_box(f: Formula) -> tuple[str, Formula] | None:
    if f.op == NOT_OP and f.inner.op == DIA_OP and f.inner.inner.op == NOT_OP:
        return f.inner.agent, f.inner.inner.inner
    return None


def single_negation(f: Formula) -> Formula:
    """Strip one outer negation if present, otherwise add one."""
    sn = f._sn
    if sn is None:
        sn = f.inner if f.op == NOT_OP else Not(f)
        f._sn = sn
    return sn


def depth(f: Formula) -> int:
    """Modal depth; a box counts once since it is a negated diamond."""
    d = f._depth
    if d is None:
        if f.op == DIA_OP:
            d = depth(f.inner) + 1
        elif f.op == NOT_OP:
            d = depth(f.inner)
        elif f.op == OR_OP:
            d = max(depth(f.left), depth(f.right))
        else:
            d = 0
        f._depth = d
    return d


def disjuncts(f: Formula) -> tuple[Formula, ...]:
    """Operands of a (nested) disjunction, flattened left to right."""
    out = f._disjuncts
    if out is None:
        acc = []
        stack = [f]
        while stack:
            g = stack.pop()
            if g.op == OR_OP:
                stack.append(g.right)
                stack.append(g.left)
            else:
                acc.append(g)
        out = tuple(acc)
        f._disjuncts = out
    return out


def subformulas(f: Formula) -> Iterator[Formula]:
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        yield g
        stack.extend(g.children())


def closure(phis: Iterable[Formula]) -> frozenset[Formula]:
    """Least superset closed under subformulas and single negation."""
    out: set[Formula] = set()
    stack = list(phis)
    while stack:
        g = stack.pop()
        if g in out:
            continue
        out.add(g)
        stack.extend(g.children())
        stack.append(single_negation(g))
    return frozenset(out)


def propositions_of(phis: Iterable[Formula] | Formula) -> frozenset[str]:
    if isinstance(phis, Formula):
        phis = [phis]
    return frozenset(g.name for f in phis for g in subformulas(f) if g.op == PROP_OP)


def agents_of(phis: Iterable[Formula] | Formula) -> frozenset[str]:
    if isinstance(phis, Formula):
        phis = [phis]
    return frozenset(g.agent for f in phis for g in subformulas(f) if g.op == DIA_OP)


def size(f: Formula) -> int:
    """Number of nodes in the tree (shared subtrees counted once per occurrence)."""
    return 1 + sum(size(c) for c in f.children())


# Printing.  Levels: 0 implication, 1 or, 2 and, 3 unary, 4 atom.

def _render(f: Formula) -> tuple[str, int]:
    pair = as_and(f)
    if pair is not None:
        return f"{_wrap(pair[0], 2)} & {_wrap(pair[1], 3)}", 2
    box = as_box(f)
    if box is not None:
        return f"[{box[0]}]{_wrap(box[1], 3)}", 3
    op = f.op
    if op == TOP_OP:
        return "top", 4
    if op == BOT_OP:
        return "bot", 4
    if op == PROP_OP:
        return f.name, 4
    if op == NOT_OP:
        return f"~{_wrap(f.inner, 3)}", 3
    if op == DIA_OP:
        return f"<{f.agent}>{_wrap(f.inner, 3)}", 3
    return f"{_wrap(f.left, 1)} | {_wrap(f.right, 2)}", 1


def _wrap(f: Formula, level: int) -> str:
    text, own = _render(f)
    return text if own >= level else f"({text})"


def render(f: Formula) -> str:
    text = f._text
    if text is None:
        text = _render(f)[0]
        f._text = text
    return text


# Parsing.

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(->)|([|&~<>\[\]()])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            skipped = len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[pos + skipped]!r}", pos + skipped)
        start = m.start(m.lastindex)
        if m.group(3) is not None:
            tokens.append(("id", m.group(3), start))
        else:
            tokens.append((m.group(m.lastindex), m.group(m.lastindex), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != kind:
            found = tok[1] or "end of input"
            raise FormulaSyntaxError(f"expected {kind!r}, found {found!r}", tok[2])
        self.i += 1
        return tok

    def ident(self) -> str:
        _, name, pos = self.take("id")
        if name in KEYWORDS or name.startswith(RESERVED_PREFIX):
            raise FormulaSyntaxError(f"reserved identifier {name!r}", pos)
        return name

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.i += 1
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "|":
            self.i += 1
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.i += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind = self.peek()
        if kind == "~":
            self.i += 1
            return Not(self.unary())
        if kind == "<":
            self.i += 1
            agent = self.ident()
            self.take(">")
            return Diamond(agent, self.unary())
        if kind == "[":
            self.i += 1
            agent = self.ident()
            self.take("]")
            return Box(agent, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, value, pos = self.tokens[self.i]
        if kind == "(":
            self.i += 1
            f = self.formula()
            self.take(")")
            return f
        if kind == "id":
            if value == "top":
                self.i += 1
                return TOP
            if value == "bot":
                self.i += 1
                return BOT
            return Prop(self.ident())
        raise FormulaSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse(text: str) -> Formula:
    """Parse the concrete syntax; raises FormulaSyntaxError with a position."""
    p = _Parser(text)
    f = p.formula()
    p.take("eof")
    return f
