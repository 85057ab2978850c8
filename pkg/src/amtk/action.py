"""Action models, generated submodels, regular versions and bisimulation refinement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .formula import Diamond, Formula, depth, disj, propositions_of, render
from .solver import SolverHandle, ensure

EventId = Hashable


def sort_key(e) -> str:
    """Deterministic text key for event ids (strings, tuples, blocks, formulas)."""
    if isinstance(e, str):
        return e
    if isinstance(e, Formula):
        return render(e)
    if isinstance(e, frozenset):
        return "{" + ",".join(sorted(sort_key(i) for i in e)) + "}"
    if isinstance(e, tuple):
        return "(" + ",".join(sort_key(i) for i in e) + ")"
    return repr(e)


@dataclass(frozen=True)
class ActionModel:
    events: tuple
    pre: Mapping[EventId, Formula]
    relations: Mapping[str, frozenset]
    actual: frozenset
    agents: frozenset[str] = frozenset()
    _succ: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        events = tuple(self.events)
        known = set(events)
        if len(known) != len(events):
            raise ValueError("duplicate event ids")
        if set(self.pre) != known:
            raise ValueError("every event needs exactly one precondition")
        rel = {}
        for agent, edges in self.relations.items():
            edges = frozenset((u, v) for u, v in edges)
            for u, v in edges:
                if u not in known or v not in known:
                    raise ValueError(f"edge ({u}, {v}) of agent {agent} leaves the model")
            rel[agent] = edges
        actual = frozenset(self.actual)
        if not actual <= known:
            raise ValueError("actual events must be events of the model")
        agents = frozenset(self.agents) | frozenset(rel)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "pre", dict(self.pre))
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "actual", actual)
        object.__setattr__(self, "agents", agents)
        succ = {a: {x: [] for x in events} for a in agents}
        for a, edges in rel.items():
            for u, v in edges:
                succ[a][u].append(v)
        for a in succ:
            for x in succ[a]:
                succ[a][x].sort(key=sort_key)
        object.__setattr__(self, "_succ", succ)

    @classmethod
    def build(cls, pre: Mapping, relations: Mapping | None = None, actual=(), agents=()):
        """Build from a precondition map; events keep the map's order."""
        return cls(tuple(pre), pre, relations or {}, frozenset(actual), frozenset(agents))

    def successors(self, agent: str, x: EventId) -> list:
        table = self._succ.get(agent)
        return table[x] if table is not None else []

    def preconditions(self) -> list[Formula]:
        return [self.pre[x] for x in self.events]

    def depth(self) -> int:
        return max((depth(f) for f in self.preconditions()), default=0)

    def propositions(self) -> frozenset[str]:
        return propositions_of(self.preconditions())

    def size(self) -> int:
        return len(self.events)

    def sorted_events(self) -> list:
        return sorted(self.events, key=sort_key)

    def restrict(self, keep: Iterable[EventId]) -> "ActionModel":
        keep = set(keep)
        events = tuple(x for x in self.events if x in keep)
        return ActionModel(
            events,
            {x: self.pre[x] for x in events},
            {a: {(u, v) for u, v in e if u in keep and v in keep} for a, e in self.relations.items()},
            self.actual & keep,
            self.agents,
        )

    def renamed(self, names: Mapping) -> "ActionModel":
        return ActionModel(
            tuple(names[x] for x in self.events),
            {names[x]: f for x, f in self.pre.items()},
            {a: {(names[u], names[v]) for u, v in e} for a, e in self.relations.items()},
            frozenset(names[x] for x in self.actual),
            self.agents,
        )


@dataclass(frozen=True)
class EventPartition:
    blocks: tuple[frozenset, ...]
    generation: int

    def block_of(self, x) -> frozenset:
        for b in self.blocks:
            if x in b:
                return b
        raise KeyError(x)


def generated_submodel(a: ActionModel, seed: Iterable[EventId], solver: SolverHandle | None = None) -> ActionModel:
    """Smallest submodel containing seed and closed under consistent guarded steps."""
    solver = ensure(solver)
    keep = set(seed)
    if not keep <= set(a.events):
        raise ValueError("seed must consist of events of the model")
    stack = sorted(keep, key=sort_key)
    while stack:
        x = stack.pop()
        for agent in sorted(a.agents):
            for y in a.successors(agent, x):
                if y not in keep and solver.satisfiable(a.pre[x], Diamond(agent, a.pre[y])):
                    keep.add(y)
                    stack.append(y)
    return a.restrict(keep)


def reach_sets(a: ActionModel, x: EventId, agent: str, solver: SolverHandle | None = None) -> tuple[frozenset, frozenset]:
    """(R, Q): events y with Pre(x) & <agent>Pre(y) satisfiable, and those among x's successors."""
    solver = ensure(solver)
    r = frozenset(y for y in a.events if solver.satisfiable(a.pre[x], Diamond(agent, a.pre[y])))
    q = r & frozenset(a.successors(agent, x))
    return r, q


def regular_version(a: ActionModel, phis: Iterable[Formula], solver: SolverHandle | None = None) -> ActionModel:
    """Events (x, phi) with phi entailing Pre(x); edges follow a and consistency."""
    solver = ensure(solver)
    phis = list(dict.fromkeys(phis))
    events = [(x, f) for x in a.events for f in phis if solver.entails(f, a.pre[x])]
    pre = {e: e[1] for e in events}
    by_event: dict = {}
    for e in events:
        by_event.setdefault(e[0], []).append(e)
    relations = {}
    for agent in sorted(a.agents):
        edges = set()
        for x, f in events:
            for x2 in a.successors(agent, x):
                for e2 in by_event.get(x2, ()):
                    if solver.satisfiable(f, Diamond(agent, e2[1])):
                        edges.add(((x, f), e2))
        relations[agent] = edges
    actual = [e for e in events if e[0] in a.actual]
    return ActionModel(tuple(events), pre, relations, frozenset(actual), a.agents)


def canonical_version(a: ActionModel, solver: SolverHandle | None = None) -> ActionModel:
    solver = ensure(solver)
    return regular_version(a, solver.atom_formulas(a.preconditions()), solver)


class EquivalenceIndex:
    """Groups formulas into solver-equivalence classes, numbered by first arrival."""

    def __init__(self, solver: SolverHandle):
        self.solver = solver
        self.reps: list[Formula] = []
        self._ids: dict[Formula, int] = {}

    def index(self, f: Formula) -> int:
        hit = self._ids.get(f)
        if hit is not None:
            return hit
        for i, r in enumerate(self.reps):
            if self.solver.equivalent(f, r):
                self._ids[f] = i
                return i
        self.reps.append(f)
        self._ids[f] = len(self.reps) - 1
        return len(self.reps) - 1

    def add_if_new(self, f: Formula) -> bool:
        n = len(self.reps)
        self.index(f)
        return len(self.reps) > n


def bisim_refine(a: ActionModel, solver: SolverHandle | None = None) -> tuple[ActionModel, EventPartition]:
    """Coarsest refinement of precondition equivalence stable under guarded steps.

    Returns the quotient model, whose events are the blocks, and the partition.
    """
    solver = ensure(solver)
    classes = EquivalenceIndex(solver)
    events = a.sorted_events()
    agents = sorted(a.agents)
    q = {(x, ag): reach_sets(a, x, ag, solver)[1] for x in events for ag in agents}
    block = {x: classes.index(a.pre[x]) for x in events}
    count = len(set(block.values()))
    generation = 0
    while True:
        sigs: dict = {}
        new = {}
        for x in events:
            sig = (block[x],) + tuple(frozenset(block[y] for y in q[(x, ag)]) for ag in agents)
            new[x] = sigs.setdefault(sig, len(sigs))
        block = new
        generation += 1
        if len(sigs) == count:
            break
        count = len(sigs)
    members: dict[int, list] = {}
    for x in events:
        members.setdefault(block[x], []).append(x)
    blocks = tuple(frozenset(ms) for _, ms in sorted(members.items(), key=lambda kv: sort_key(kv[1][0])))
    of = {x: b for b in blocks for x in b}
    pre = {b: a.pre[min(b, key=sort_key)] for b in blocks}
    relations = {}
    for ag in agents:
        relations[ag] = {(of[x], of[y]) for x in events for y in q[(x, ag)]}
    actual = frozenset(b for b in blocks if b & a.actual)
    quotient = ActionModel(blocks, pre, relations, actual, a.agents)
    return quotient, EventPartition(blocks, generation)


def disjunction_of(a: ActionModel, xs: Iterable[EventId]) -> Formula:
    return disj(a.pre[x] for x in sorted(xs, key=sort_key))
