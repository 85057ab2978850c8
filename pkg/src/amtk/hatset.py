"""Hat normal forms, their products and the derived candidate set for emulation.

A hat formula is a list of disjuncts.  Each disjunct pairs a box-free
conjunction ``alpha`` of literals and diamonds with one hat formula per agent
placed under a box, so a hat formula denotes

    OR_m ( alpha_m & AND_a [a] body_m^a ).

Hat formulas and disjuncts are interned like formulas, so structural equality
is identity.  An agent missing from a disjunct's boxes has the trivial body.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterable

from .action import EquivalenceIndex
from .formula import (
    BOT_OP,
    DIA_OP,
    NOT_OP,
    OR_OP,
    TOP_OP,
    Box,
    Formula,
    Not,
    conj,
    depth,
    disj,
    single_negation,
)
from .solver import SolverHandle, ensure

_hat_table: dict = {}
_hat_lock = threading.Lock()


class HatDisjunct:
    __slots__ = ("alpha", "boxes", "_formula", "_bodies")

    def __new__(cls, alpha: tuple[Formula, ...], boxes: tuple[tuple[str, "HatFormula"], ...]):
        key = ("d", alpha, boxes)
        node = _hat_table.get(key)
        if node is None:
            with _hat_lock:
                node = _hat_table.get(key)
                if node is None:
                    node = object.__new__(cls)
                    node.alpha = alpha
                    node.boxes = boxes
                    node._formula = None
                    node._bodies = dict(boxes)
                    _hat_table[key] = node
        return node

    def body(self, agent: str) -> "HatFormula":
        return self._bodies.get(agent, TOP_HAT)

    @property
    def formula(self) -> Formula:
        if self._formula is None:
            self._formula = conj(list(self.alpha) + [Box(a, h.formula) for a, h in self.boxes])
        return self._formula

    def __repr__(self) -> str:
        return f"HatDisjunct({self.alpha!r}, {self.boxes!r})"


class HatFormula:
    __slots__ = ("disjuncts", "_formula")

    def __new__(cls, disjuncts: tuple[HatDisjunct, ...]):
        disjuncts = tuple(dict.fromkeys(disjuncts))
        key = ("h", disjuncts)
        node = _hat_table.get(key)
        if node is None:
            with _hat_lock:
                node = _hat_table.get(key)
                if node is None:
                    node = object.__new__(cls)
                    node.disjuncts = disjuncts
                    node._formula = None
                    _hat_table[key] = node
        return node

    @property
    def formula(self) -> Formula:
        if self._formula is None:
            self._formula = disj(d.formula for d in self.disjuncts)
        return self._formula

    @property
    def size(self) -> int:
        return len(self.disjuncts)

    @property
    def depth(self) -> int:
        return depth(self.formula)

    def __repr__(self) -> str:
        return f"HatFormula({self.disjuncts!r})"

    def __str__(self) -> str:
        return str(self.formula)


TOP_HAT = HatFormula((HatDisjunct((), ()),))
BOT_HAT = HatFormula(())

_dnf_memo: dict = {}


def _dnf(f: Formula, positive: bool) -> list[frozenset]:
    """DNF over basic literals: propositions, diamonds and their negations."""
    key = (f, positive)
    hit = _dnf_memo.get(key)
    if hit is not None:
        return hit
    op = f.op
    if op == NOT_OP:
        out = _dnf(f.inner, not positive)
    elif op == TOP_OP:
        out = [frozenset()] if positive else []
    elif op == BOT_OP:
        out = [] if positive else [frozenset()]
    elif op == OR_OP:
        left = _dnf(f.left, positive)
        right = _dnf(f.right, positive)
        if positive:
            out = list(dict.fromkeys(left + right))
        else:
            out = []
            for t1 in left:
                for t2 in right:
                    t = t1 | t2
                    if not any(single_negation(g) in t for g in t):
                        out.append(t)
            out = list(dict.fromkeys(out))
    else:
        out = [frozenset([f if positive else Not(f)])]
    _dnf_memo[key] = out
    return out


def _is_box(lit: Formula) -> bool:
    return lit.op == NOT_OP and lit.inner.op == DIA_OP


def hat_normal_form(f: Formula, solver: SolverHandle | None = None) -> HatFormula:
    """An equivalent hat formula of no greater depth; unsatisfiable disjuncts are dropped."""
    solver = ensure(solver)
    out = []
    for term in _dnf(f, True):
        alpha = tuple(sorted((g for g in term if not _is_box(g)), key=lambda g: g.uid))
        bodies: dict[str, list[Formula]] = {}
        for g in term:
            if _is_box(g):
                bodies.setdefault(g.inner.agent, []).append(single_negation(g.inner.inner))
        boxes = []
        for agent in sorted(bodies):
            body = hat_normal_form(conj(sorted(bodies[agent], key=lambda g: g.uid)), solver)
            if body is not TOP_HAT:
                boxes.append((agent, body))
        d = HatDisjunct(alpha, tuple(boxes))
        if solver.satisfiable(d.formula):
            out.append(d)
    return HatFormula(tuple(out))


_product_memo: dict = {}


def hat_product(f: HatFormula, g: HatFormula, solver: SolverHandle | None = None) -> HatFormula:
    """Product keeping the jointly satisfiable pairs of disjuncts; denotes the conjunction."""
    if f is TOP_HAT:
        return g
    if g is TOP_HAT:
        return f
    hit = _product_memo.get((f, g))
    if hit is not None:
        return hit
    solver = ensure(solver)
    out = []
    for m in f.disjuncts:
        for n in g.disjuncts:
            if not solver.satisfiable(m.formula, n.formula):
                continue
            alpha = tuple(sorted(set(m.alpha) | set(n.alpha), key=lambda h: h.uid))
            agents = sorted({a for a, _ in m.boxes} | {a for a, _ in n.boxes})
            boxes = []
            for a in agents:
                body = hat_product(m.body(a), n.body(a), solver)
                if body is not TOP_HAT:
                    boxes.append((a, body))
            out.append(HatDisjunct(alpha, tuple(boxes)))
    result = HatFormula(tuple(out))
    _product_memo[(f, g)] = result
    return result


def product_all(hats: Iterable[HatFormula], solver: SolverHandle | None = None) -> HatFormula:
    out = TOP_HAT
    for h in hats:
        out = hat_product(out, h, solver)
    return out


def _box_agents(f: HatFormula) -> list[str]:
    return sorted({a for d in f.disjuncts for a, _ in d.boxes})


def maximal_disjuncts(f: HatFormula, solver: SolverHandle | None = None) -> list[int]:
    """Indices m such that no other disjunct's box bodies are strictly weaker in every agent."""
    solver = ensure(solver)
    ds = f.disjuncts
    agents = _box_agents(f)

    def below(m: int, n: int) -> bool:
        return all(solver.entails(ds[m].body(a).formula, ds[n].body(a).formula) for a in agents)

    return [
        m
        for m in range(len(ds))
        if not any(n != m and below(m, n) and not below(n, m) for n in range(len(ds)))
    ]


def box_bodies(f: HatFormula, agents: Iterable[str], solver: SolverHandle | None = None, maximal: bool = True):
    """Bodies D^a_m(f) over agents a and (maximal) disjuncts m, first occurrence order."""
    idx = maximal_disjuncts(f, solver) if maximal else range(len(f.disjuncts))
    out = []
    for m in idx:
        for a in sorted(agents):
            out.append(f.disjuncts[m].body(a))
    return list(dict.fromkeys(out))


@dataclass(frozen=True)
class KappaResult:
    pairs: tuple[tuple[HatFormula, HatFormula], ...]
    f0: tuple[HatFormula, ...]
    family: tuple[HatFormula, ...]
    kappa: tuple[Formula, ...]


def hat_pairs(phis: Iterable[Formula], solver: SolverHandle | None = None):
    solver = ensure(solver)
    return tuple((hat_normal_form(f, solver), hat_normal_form(Not(f), solver)) for f in dict.fromkeys(phis))


def build_kappa(
    phis: Iterable[Formula],
    agents: Iterable[str],
    solver: SolverHandle | None = None,
    cap: int = 10**4,
) -> KappaResult:
    """Candidate set from the union of the hat families generated by phis.

    F0 is the set of products choosing one side of every pair (hat of phi,
    hat of not phi).  New members are products of a box body of a maximal
    disjunct of an existing member with a member of F0.  Members and bodies
    are kept up to equivalence; the loop stops once no new body appears.
    """
    solver = ensure(solver)
    agents = sorted(set(agents))
    pairs = hat_pairs(phis, solver)
    f0_index = EquivalenceIndex(solver)
    f0 = [TOP_HAT]
    for pos, neg in pairs:
        nxt = []
        for h in f0:
            for side in (pos, neg):
                p = hat_product(h, side, solver)
                if p.disjuncts:
                    nxt.append(p)
        f0 = nxt
    f0 = [h for h in f0 if f0_index.add_if_new(h.formula)]

    family_index = EquivalenceIndex(solver)
    family = []
    for h in f0:
        if family_index.add_if_new(h.formula):
            family.append(h)
    body_index = EquivalenceIndex(solver)
    queue = []
    for h in family:
        for b in box_bodies(h, agents, solver):
            if body_index.add_if_new(b.formula):
                queue.append(b)
    while queue:
        b = queue.pop(0)
        for g in f0:
            h = hat_product(b, g, solver)
            if not h.disjuncts or not family_index.add_if_new(h.formula):
                continue
            family.append(h)
            if len(family) > cap:
                raise ValueError(f"hat family exceeds cap {cap}")
            for nb in box_bodies(h, agents, solver):
                if body_index.add_if_new(nb.formula):
                    queue.append(nb)

    kappa_index = EquivalenceIndex(solver)
    kappa = []
    for h in family:
        for m in maximal_disjuncts(h, solver):
            d = h.disjuncts[m]
            theta = conj(Box(a, d.body(a).formula) for a in agents if d.body(a) is not TOP_HAT)
            if kappa_index.add_if_new(theta):
                kappa.append(theta)
    return KappaResult(pairs, tuple(f0), tuple(family), tuple(kappa))


def h_sets(
    phis: Iterable[Formula], agents: Iterable[str], upto: int, solver: SolverHandle | None = None
) -> list[set[HatFormula]]:
    """Structural sets H_1..H_upto of iterated box bodies of the plain product family.

    H_i is the union over agent sequences a_1..a_i of the products
    D^{a_i}..D^{a_1}F0 x D^{a_i}..D^{a_2}F0 x ... x D^{a_i}F0,
    with D^a taking the a-bodies of all disjuncts.
    """
    solver = ensure(solver)
    agents = sorted(set(agents))
    pairs = hat_pairs(phis, solver)
    f0 = {TOP_HAT}
    for pos, neg in pairs:
        f0 = {hat_product(h, side, solver) for h in f0 for side in (pos, neg)}

    def down(hats: set, a: str) -> set:
        return {d.body(a) for h in hats for d in h.disjuncts}

    out = []
    for i in range(1, upto + 1):
        hi: set = set()
        for seq in itertools.product(agents, repeat=i):
            # layers[j] = D^{a_i}..D^{a_{j+1}} F0
            layers = []
            for j in range(i):
                s = f0
                for a in seq[j:]:
                    s = down(s, a)
                layers.append(s)
            acc = {TOP_HAT}
            for layer in layers:
                acc = {hat_product(x, y, solver) for x in acc for y in layer}
            hi |= acc
        out.append(hi)
    return out


def h_bound(phis: Iterable[Formula], agents: Iterable[str], i: int, solver: SolverHandle | None = None) -> float:
    """Upper bound on |H_i| from the number of disjuncts along iterated bodies."""
    solver = ensure(solver)
    phis = list(dict.fromkeys(phis))
    agents = sorted(set(agents))
    delta = max((depth(f) for f in phis), default=0)
    layer = {h for pair in hat_pairs(phis, solver) for h in pair}
    k = 0
    for _ in range(max(delta, 1)):
        k = max([k] + [h.size for h in layer])
        layer = {d.body(a) for h in layer for d in h.disjuncts for a in agents}
    return (2 * k ** ((i + 1) / 2)) ** (len(phis) * i) * len(agents) ** i
