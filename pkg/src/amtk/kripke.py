"""Pointed Kripke models: truth, product update, bisimulation and canonical models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .formula import (
    BOT_OP,
    DIA_OP,
    NOT_OP,
    OR_OP,
    PROP_OP,
    TOP_OP,
    Formula,
    agents_of,
)
from .solver import SolverHandle, ensure

World = Hashable


@dataclass(frozen=True)
class KripkeModel:
    worlds: tuple
    valuation: Mapping[World, frozenset[str]]
    relations: Mapping[str, frozenset[tuple[World, World]]]
    actual: frozenset
    agents: frozenset[str] = frozenset()
    _succ: dict = field(default=None, init=False, repr=False, compare=False)
    _ext: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        worlds = tuple(self.worlds)
        known = set(worlds)
        if len(known) != len(worlds):
            raise ValueError("duplicate world ids")
        val = {w: frozenset(self.valuation.get(w, ())) for w in worlds}
        extra = set(self.valuation) - known
        if extra:
            raise ValueError(f"valuation mentions unknown worlds {sorted(map(str, extra))}")
        rel = {}
        for agent, edges in self.relations.items():
            edges = frozenset((u, v) for u, v in edges)
            for u, v in edges:
                if u not in known or v not in known:
                    raise ValueError(f"edge ({u}, {v}) of agent {agent} leaves the model")
            rel[agent] = edges
        actual = frozenset(self.actual)
        if not actual <= known:
            raise ValueError("actual worlds must be worlds of the model")
        agents = frozenset(self.agents) | frozenset(rel)
        object.__setattr__(self, "worlds", worlds)
        object.__setattr__(self, "valuation", val)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "actual", actual)
        object.__setattr__(self, "agents", agents)
        succ = {a: {w: [] for w in worlds} for a in agents}
        for a, edges in rel.items():
            for u, v in edges:
                succ[a][u].append(v)
        object.__setattr__(self, "_succ", succ)
        object.__setattr__(self, "_ext", {})

    def successors(self, agent: str, w: World) -> list:
        table = self._succ.get(agent)
        return table[w] if table is not None else []

    def truth_set(self, f: Formula) -> frozenset:
        """All worlds where f holds (bottom-up, memoised per model)."""
        ext = self._ext
        hit = ext.get(f)
        if hit is not None:
            return hit
        op = f.op
        if op == TOP_OP:
            out = frozenset(self.worlds)
        elif op == BOT_OP:
            out = frozenset()
        elif op == PROP_OP:
            out = frozenset(w for w in self.worlds if f.name in self.valuation[w])
        elif op == NOT_OP:
            out = frozenset(self.worlds) - self.truth_set(f.inner)
        elif op == OR_OP:
            out = self.truth_set(f.left) | self.truth_set(f.right)
        else:
            inner = self.truth_set(f.inner)
            out = frozenset(
                w for w in self.worlds if any(v in inner for v in self.successors(f.agent, w))
            )
        ext[f] = out
        return out

    def size(self) -> int:
        return len(self.worlds)


def holds(model: KripkeModel, world: World, f: Formula) -> bool:
    if world not in model.valuation:
        raise KeyError(f"unknown world {world!r}")
    return world in model.truth_set(f)


def product_update(model: KripkeModel, action) -> KripkeModel:
    """Product of a Kripke model with an action model."""
    worlds = []
    for w in model.worlds:
        for x in action.events:
            if holds(model, w, action.pre[x]):
                worlds.append((w, x))
    present = set(worlds)
    relations = {}
    for agent in model.agents | action.agents:
        edges = set()
        for w, x in worlds:
            for v in model.successors(agent, w):
                for y in action.successors(agent, x):
                    if (v, y) in present:
                        edges.add(((w, x), (v, y)))
        relations[agent] = edges
    actual = [(w, x) for (w, x) in worlds if w in model.actual and x in action.actual]
    return KripkeModel(
        worlds=tuple(worlds),
        valuation={(w, x): model.valuation[w] for (w, x) in worlds},
        relations=relations,
        actual=actual,
        agents=model.agents | action.agents,
    )


def _coarsest_partition(models: list[KripkeModel]) -> dict:
    """Largest bisimulation on the disjoint union, as a block index per world."""
    nodes = [(i, w) for i, m in enumerate(models) for w in m.worlds]
    agents = sorted(set().union(*(m.agents for m in models)))
    start: dict = {}
    block = {}
    for i, w in nodes:
        block[(i, w)] = start.setdefault(models[i].valuation[w], len(start))
    count = len(start)
    while True:
        sigs: dict = {}
        new = {}
        for i, w in nodes:
            m = models[i]
            sig = (block[(i, w)],) + tuple(
                frozenset(block[(i, v)] for v in m.successors(a, w)) for a in agents
            )
            new[(i, w)] = sigs.setdefault(sig, len(sigs))
        block = new
        if len(sigs) == count:
            return block
        count = len(sigs)


def kripke_bisimilar(m: KripkeModel, n: KripkeModel) -> tuple[bool, frozenset | None]:
    """Bisimilarity of the pointed models.

    On success the greatest bisimulation between the two models is returned.
    """
    block = _coarsest_partition([m, n])
    by_block: dict = {}
    for v in n.worlds:
        by_block.setdefault(block[(1, v)], []).append(v)
    m_blocks = {block[(0, w)] for w in m.actual}
    n_blocks = {block[(1, v)] for v in n.actual}
    if m_blocks != n_blocks:
        return False, None
    relation = frozenset((w, v) for w in m.worlds for v in by_block.get(block[(0, w)], ()))
    return True, relation


def canonical_kripke(
    phis: Iterable[Formula],
    solver: SolverHandle | None = None,
    agents: Iterable[str] = (),
    edge_check: str = "closure",
) -> KripkeModel:
    """Canonical model over the atoms of phis; every world is actual.

    World i carries the propositions of its atom plus the fresh proposition
    ``__atom_<i>``.  With edge_check="solver" an a-edge from atom X to atom Y
    is added when the conjunction of X and <a>(conjunction of Y) is
    satisfiable.  The default "closure" check adds the same edges by testing
    that no box body of X is refuted in Y, which is equivalent and avoids a
    quadratic number of solver calls.
    """
    solver = ensure(solver)
    phis = list(phis)
    atoms = solver.atoms(phis)
    agents = frozenset(agents) | agents_of(phis)
    worlds = tuple(range(len(atoms)))
    valuation = {
        i: frozenset(f.name for f in atom.members if f.op == PROP_OP) | {f"__atom_{i}"}
        for i, atom in enumerate(atoms)
    }
    relations = {}
    for a in sorted(agents):
        edges = set()
        if edge_check == "solver":
            from .formula import Diamond

            for i, x in enumerate(atoms):
                for j, y in enumerate(atoms):
                    if solver.satisfiable(x.conjunction, Diamond(a, y.conjunction)):
                        edges.add((i, j))
        elif edge_check == "closure":
            refuted = [
                frozenset(
                    f.inner.inner
                    for f in atom.members
                    if f.op == NOT_OP and f.inner.op == DIA_OP and f.inner.agent == a
                )
                for atom in atoms
            ]
            for i in worlds:
                for j, y in enumerate(atoms):
                    if refuted[i].isdisjoint(y.members):
                        edges.add((i, j))
        else:
            raise ValueError(f"unknown edge_check {edge_check!r}")
        relations[a] = edges
    return KripkeModel(worlds, valuation, relations, worlds, agents)
