"""Satisfiability for multi-modal K with memoised queries and atom enumeration.

The procedure is a tableau: a propositional DPLL search over the formulas of a
world, followed by one fresh successor per diamond that carries the bodies of
all boxes of the same agent.  Successor labels have smaller modal depth, so no
loop check is needed.  Successor labels are memoised across queries.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable

from .formula import (
    BOT_OP,
    DIA_OP,
    NOT_OP,
    OR_OP,
    PROP_OP,
    TOP_OP,
    Formula,
    Not,
    closure,
    conj,
    disjuncts,
    single_negation,
)

DEFAULT_NODE_BUDGET = 10**6

_sn = single_negation


class SolverBudgetExceeded(RuntimeError):
    """A single query expanded more tableau nodes than the handle allows."""


@dataclass
class SolverStats:
    queries: int = 0
    cache_hits: int = 0
    nodes: int = 0


@dataclass(frozen=True)
class Atom:
    """A maximal consistent subset of a closure with its conjunction."""

    members: frozenset[Formula]
    conjunction: Formula


class _Witness:
    __slots__ = ("props", "succ")

    def __init__(self, props: frozenset[str], succ: dict[str, list["_Witness"]]):
        self.props = props
        self.succ = succ


_norm_memo: dict[Formula, Formula] = {}


def normalize(f: Formula) -> Formula:
    """Flatten disjunctions and order their operands; used as a cache key."""
    out = _norm_memo.get(f)
    if out is not None:
        return out
    op = f.op
    if op == OR_OP:
        ops = sorted({normalize(g) for g in disjuncts(f)}, key=lambda g: g.uid)
        out = ops[0]
        for g in ops[1:]:
            out = out | g
    elif op == NOT_OP:
        inner = normalize(f.inner)
        out = f if inner is f.inner else Not(inner)
    elif op == DIA_OP:
        inner = normalize(f.inner)
        out = f if inner is f.inner else type(f)(f.agent, inner)
    else:
        out = f
    _norm_memo[f] = out
    return out


def _budget_from_env() -> int:
    raw = os.environ.get("AMTK_NODE_BUDGET")
    if raw is None:
        return DEFAULT_NODE_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"AMTK_NODE_BUDGET must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ValueError("AMTK_NODE_BUDGET must be positive")
    return value


class SolverHandle:
    """Owns the query cache, the successor memo and the statistics.

    Handles are not thread safe; give each worker its own.
    """

    def __init__(self, budget: int | None = None, cache: bool = True):
        self.budget = budget if budget is not None else _budget_from_env()
        self.cache_enabled = cache
        self.stats = SolverStats()
        self._cache: dict[frozenset, bool] = {}
        self._memo: dict[frozenset, _Witness | None] = {}
        self._spent = 0

    # -- public queries ---------------------------------------------------

    def satisfiable(self, *formulas: Formula) -> bool:
        """Is the conjunction of the given formulas satisfiable?"""
        self.stats.queries += 1
        key = frozenset(normalize(f) for f in formulas)
        if self.cache_enabled:
            hit = self._cache.get(key)
            if hit is not None:
                self.stats.cache_hits += 1
                return hit
        else:
            self._memo.clear()
        result = self._run(key) is not None
        if self.cache_enabled:
            self._cache[key] = result
        return result

    def is_satisfiable(self, f: Formula) -> tuple[bool, "KripkeModel | None"]:
        """Satisfiability with a pointed witness model when satisfiable."""
        self.stats.queries += 1
        if not self.cache_enabled:
            self._memo.clear()
        node = self._run(frozenset([normalize(f)]))
        if node is None:
            return False, None
        return True, _witness_model(node)

    def is_valid(self, f: Formula) -> bool:
        return not self.satisfiable(_sn(f))

    def entails(self, f: Formula, g: Formula) -> bool:
        if f is g or g.op == TOP_OP or f.op == BOT_OP:
            return True
        return not self.satisfiable(f, _sn(g))

    def equivalent(self, f: Formula, g: Formula) -> bool:
        return f is g or (self.entails(f, g) and self.entails(g, f))

    def entails_all(self, premises: Iterable[Formula], g: Formula) -> bool:
        return not self.satisfiable(*premises, _sn(g))

    def gamma_filter(self, xi: Formula, phis: Iterable[Formula]) -> tuple[Formula, ...]:
        """Members of phis that entail xi, in input order."""
        return tuple(f for f in phis if self.entails(f, xi))

    def atoms(self, phis: Iterable[Formula]) -> list[Atom]:
        """Maximal consistent subsets of closure(phis), in a fixed order.

        Every closure member is a Boolean combination of the propositions and
        diamonds of the closure, so an atom is fixed by a consistent sign
        choice on those base formulas.  Sign choices are enumerated depth first
        and pruned as soon as one agent's diamonds clash with its boxes.
        """
        cl = closure(phis)
        base = sorted((f for f in cl if f.op in (PROP_OP, DIA_OP)), key=_base_key)
        props = [f for f in base if f.op == PROP_OP]
        dias = [f for f in base if f.op == DIA_OP]
        members_order = sorted(cl, key=lambda f: f.uid)
        out: list[Atom] = []

        def emit(signs: dict[Formula, bool]) -> None:
            truth: dict[Formula, bool] = {}
            members = frozenset(f for f in members_order if _eval(f, signs, truth))
            lits = [f if signs[f] else Not(f) for f in base]
            out.append(Atom(members, conj(lits)))

        def fits(agent: str, pos: list[Formula], neg: list[Formula]) -> bool:
            boxes = [_sn(h) for h in neg]
            return all(self.satisfiable(g, *boxes) for g in pos)

        def walk(i: int, signs: dict, pos: dict, neg: dict) -> None:
            if i == len(dias):
                for bits in _bit_rows(len(props)):
                    full = dict(signs)
                    full.update(zip(props, bits))
                    emit(full)
                return
            d = dias[i]
            a = d.agent
            for value in (True, False):
                p = pos.get(a, [])
                n = neg.get(a, [])
                if value:
                    p = p + [d.inner]
                    ok = self.satisfiable(d.inner, *(_sn(h) for h in n))
                else:
                    n = n + [d.inner]
                    ok = fits(a, p, n)
                if ok:
                    signs[d] = value
                    walk(i + 1, signs, {**pos, a: p}, {**neg, a: n})
                    del signs[d]

        walk(0, {}, {}, {})
        return out

    def atom_formulas(self, phis: Iterable[Formula]) -> list[Formula]:
        return [a.conjunction for a in self.atoms(phis)]

    # -- tableau ----------------------------------------------------------

    def _run(self, label: frozenset) -> _Witness | None:
        self._spent = 0
        return self._label(label)

    def _tick(self) -> None:
        self._spent += 1
        self.stats.nodes += 1
        if self._spent > self.budget:
            raise SolverBudgetExceeded(f"tableau exceeded the node budget of {self.budget}")

    def _label(self, label: frozenset) -> _Witness | None:
        memo = self._memo
        if label in memo:
            return memo[label]
        assigned: set[Formula] = set()
        clauses: list[tuple[Formula, ...]] = []
        if _expand(label, assigned, clauses):
            result = self._dpll(assigned, clauses)
        else:
            result = None
        memo[label] = result
        return result

    def _dpll(self, assigned: set, clauses: list) -> _Witness | None:
        self._tick()
        while True:
            open_clauses = []
            unit = None
            for cl in clauses:
                live = []
                done = False
                for d in cl:
                    if d in assigned:
                        done = True
                        break
                    if _sn(d) not in assigned:
                        live.append(d)
                if done:
                    continue
                if not live:
                    return None
                if len(live) == 1:
                    unit = live[0]
                    break
                open_clauses.append(live)
            if unit is None:
                break
            if not _expand((unit,), assigned, clauses):
                return None
        if not open_clauses:
            return self._modal(assigned)
        if not self._modal_consistent(assigned):
            return None
        branch = min(open_clauses, key=len)
        refuted: list[Formula] = []
        for d in branch:
            a2 = set(assigned)
            c2 = list(clauses)
            if _expand((d, *refuted), a2, c2):
                result = self._dpll(a2, c2)
                if result is not None:
                    return result
            refuted.append(_sn(d))
        return None

    def _modal_consistent(self, assigned: set) -> bool:
        """Early pruning: every diamond so far must fit the boxes so far."""
        dias = []
        boxes: dict[str, list[Formula]] = {}
        for f in assigned:
            if f.op == DIA_OP:
                dias.append(f)
            elif f.op == NOT_OP and f.inner.op == DIA_OP:
                boxes.setdefault(f.inner.agent, []).append(_sn(f.inner.inner))
        for d in dias:
            if self._label(frozenset((d.inner, *boxes.get(d.agent, ())))) is None:
                return False
        return True

    def _modal(self, assigned: set) -> _Witness | None:
        dias: dict[str, list[Formula]] = {}
        boxes: dict[str, list[Formula]] = {}
        props = []
        for f in assigned:
            op = f.op
            if op == DIA_OP:
                dias.setdefault(f.agent, []).append(f.inner)
            elif op == NOT_OP and f.inner.op == DIA_OP:
                boxes.setdefault(f.inner.agent, []).append(_sn(f.inner.inner))
            elif op == PROP_OP:
                props.append(f.name)
        succ: dict[str, list[_Witness]] = {}
        for agent in sorted(dias):
            bx = boxes.get(agent, [])
            for body in sorted(dias[agent], key=lambda g: g.uid):
                child = self._label(frozenset((body, *bx)))
                if child is None:
                    return None
                succ.setdefault(agent, []).append(child)
        return _Witness(frozenset(props), succ)


def _expand(todo: Iterable[Formula], assigned: set, clauses: list) -> bool:
    """Saturate the non-branching rules; False on a clash."""
    stack = list(todo)
    while stack:
        f = stack.pop()
        if f in assigned:
            continue
        op = f.op
        if op == BOT_OP:
            return False
        if _sn(f) in assigned:
            return False
        assigned.add(f)
        if op == NOT_OP:
            g = f.inner
            gop = g.op
            if gop == TOP_OP:
                return False
            if gop == NOT_OP:
                stack.append(g.inner)
            elif gop == OR_OP:
                stack.extend(_sn(d) for d in disjuncts(g))
        elif op == OR_OP:
            clauses.append(disjuncts(f))
    return True


def _eval(f: Formula, signs: dict, memo: dict) -> bool:
    v = memo.get(f)
    if v is not None:
        return v
    op = f.op
    if op == TOP_OP:
        v = True
    elif op == BOT_OP:
        v = False
    elif op == NOT_OP:
        v = not _eval(f.inner, signs, memo)
    elif op == OR_OP:
        v = _eval(f.left, signs, memo) or _eval(f.right, signs, memo)
    else:
        v = signs[f]
    memo[f] = v
    return v


def _bit_rows(n: int):
    for i in range(2**n):
        yield tuple(not (i >> (n - 1 - j)) & 1 for j in range(n))


def _base_key(f: Formula):
    if f.op == PROP_OP:
        return (0, f.name, "", 0)
    from .formula import depth, render

    return (1, f.agent, render(f.inner), depth(f))


def _witness_model(root: _Witness):
    from .kripke import KripkeModel

    ids: dict[int, str] = {}
    order: list[_Witness] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in ids:
            continue
        ids[id(node)] = f"w{len(order)}"
        order.append(node)
        for agent in sorted(node.succ, reverse=True):
            stack.extend(reversed(node.succ[agent]))
    relations: dict[str, set] = {}
    agents = set()
    for node in order:
        for agent, kids in node.succ.items():
            agents.add(agent)
            for kid in kids:
                relations.setdefault(agent, set()).add((ids[id(node)], ids[id(kid)]))
    return KripkeModel(
        worlds=tuple(ids[id(n)] for n in order),
        valuation={ids[id(n)]: n.props for n in order},
        relations=relations,
        actual=[ids[id(root)]],
        agents=agents,
    )


_default = None


def default_solver() -> SolverHandle:
    global _default
    if _default is None:
        _default = SolverHandle()
    return _default


def ensure(solver: SolverHandle | None) -> SolverHandle:
    return solver if solver is not None else default_solver()
