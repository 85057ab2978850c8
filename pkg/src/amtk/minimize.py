"""Minimisation of action models up to bisimulation, propositional emulation and equivalence."""

from __future__ import annotations

import itertools
import logging
from typing import Iterable, Sequence

from .action import (
    ActionModel,
    EquivalenceIndex,
    bisim_refine,
    generated_submodel,
    reach_sets,
    regular_version,
    sort_key,
)
from .covermod import enumerate_canonical
from .formula import Formula, Not, conj, disj
from .solver import SolverHandle, ensure

log = logging.getLogger(__name__)


def _regions(fs: Sequence[Formula], solver: SolverHandle) -> list[frozenset[int]]:
    """Index sets S with AND S & AND not(F minus S) satisfiable."""
    out = []
    n = len(fs)
    for bits in itertools.product((True, False), repeat=n):
        s = frozenset(i for i in range(n) if bits[i])
        if solver.satisfiable(*(fs[i] if bits[i] else Not(fs[i]) for i in range(n))):
            out.append(s)
    return out


def minimal_formula_basis(fs: Iterable[Formula], solver: SolverHandle | None = None) -> list[Formula]:
    """Fewest formulas G such that every f is equivalent to the disjunction of some of them.

    Members are conjunctions of subsets of fs.  A family of subsets works when
    every satisfiable region containing f contains some chosen subset that
    also contains f; the search is iterative deepening on the family size.
    """
    solver = ensure(solver)
    index = EquivalenceIndex(solver)
    fs = [f for f in fs if solver.satisfiable(f) and index.add_if_new(f)]
    if not fs:
        return []
    regions = [r for r in _regions(fs, solver) if r]
    obligations = [(i, r) for r in regions for i in sorted(r)]
    candidates = sorted(
        {frozenset(c) for r in regions for n in range(1, len(r) + 1) for c in itertools.combinations(sorted(r), n)},
        key=lambda s: (len(s), sorted(s)),
    )
    options = {ob: [t for t in candidates if ob[0] in t and t <= ob[1]] for ob in obligations}

    def search(chosen: list[frozenset], budget: int) -> list[frozenset] | None:
        open_obs = [ob for ob in obligations if not any(ob[0] in t and t <= ob[1] for t in chosen)]
        if not open_obs:
            return chosen
        if budget == 0:
            return None
        ob = min(open_obs, key=lambda o: len(options[o]))
        for t in options[ob]:
            found = search(chosen + [t], budget - 1)
            if found is not None:
                return found
        return None

    for size in range(1, len(regions) + 1):
        family = search([], size)
        if family is not None:
            family = sorted(family, key=lambda s: (len(s), sorted(s)))
            return [conj(fs[i] for i in sorted(t)) for t in family]
    raise AssertionError("the regions themselves always form a basis")


def minimize_bisimulation(a: ActionModel, solver: SolverHandle | None = None) -> ActionModel:
    """Generated submodel on the actual events, then its bisimulation quotient."""
    solver = ensure(solver)
    sub = generated_submodel(a, a.actual, solver)
    quotient, _ = bisim_refine(sub, solver)
    return quotient.renamed({blk: str(min(blk, key=sort_key)) for blk in quotient.events})


def _refine_blocks(a: ActionModel, solver: SolverHandle) -> list[list]:
    """Coarsest partition where successors into every block have equivalent disjunctions."""
    events = a.sorted_events()
    agents = sorted(a.agents)
    classes = EquivalenceIndex(solver)
    block = {x: 0 for x in events}
    count = 1
    while True:
        sigs: dict = {}
        new = {}
        for x in events:
            parts = [block[x]]
            for theta in range(count):
                for ag in agents:
                    f = disj(a.pre[z] for z in a.successors(ag, x) if block[z] == theta)
                    parts.append(classes.index(f))
            new[x] = sigs.setdefault(tuple(parts), len(sigs))
        block = new
        if len(sigs) == count:
            break
        count = len(sigs)
    groups: dict[int, list] = {}
    for x in events:
        groups.setdefault(block[x], []).append(x)
    return [groups[i] for i in sorted(groups)]


def minimize_prop_emulation(a: ActionModel, solver: SolverHandle | None = None) -> ActionModel:
    """Smallest model propositionally emulating the generated submodel of a.

    Blocks of the refinement are split by a minimal basis of the formulas that
    the block must distinguish; events are (block, basis member).
    """
    solver = ensure(solver)
    a0 = generated_submodel(a, a.actual, solver)
    blocks = _refine_blocks(a0, solver)
    agents = sorted(a0.agents)

    def succ_into(src: Iterable, agent: str, dst: list) -> Formula:
        dst_set = set(dst)
        hits = {z for x in src for z in a0.successors(agent, x) if z in dst_set}
        return disj(a0.pre[z] for z in sorted(hits, key=sort_key))

    live = [blk for blk in blocks if solver.satisfiable(disj(a0.pre[x] for x in blk))]
    bases = []
    for blk in blocks:
        fam = [succ_into(src, ag, blk) for ag in agents for src in live]
        fam.append(disj(a0.pre[x] for x in blk if x in a0.actual))
        bases.append([g for g in minimal_formula_basis(fam, solver) if solver.satisfiable(g)])

    events = [(t, j) for t, basis in enumerate(bases) for j in range(len(basis))]
    pre = {e: bases[e[0]][e[1]] for e in events}
    relations = {}
    for ag in agents:
        edges = set()
        for t, j in events:
            for t2, j2 in events:
                if solver.entails(pre[(t2, j2)], succ_into(blocks[t], ag, blocks[t2])):
                    edges.add(((t, j), (t2, j2)))
        relations[ag] = edges
    actual = [
        (t, j)
        for t, j in events
        if solver.entails(pre[(t, j)], disj(a0.pre[x] for x in blocks[t] if x in a0.actual))
    ]
    model = ActionModel(tuple(events), pre, relations, frozenset(actual), a0.agents)
    return model.renamed({e: f"e{e[0]}_{e[1]}" for e in events})


class SearchTooLarge(RuntimeError):
    pass


def minimize_equivalence(
    a: ActionModel, solver: SolverHandle | None = None, node_cap: int = 10**6
) -> ActionModel:
    """Smallest model equivalent to a, by search over covers of the refined regular version.

    The regular version over the canonical formulas of a's depth is reduced by
    bisimulation refinement.  A candidate model picks a family of sets of
    refined events; each set becomes one event whose precondition is the
    disjunction of its members, with the largest admissible successor
    relation.  The first family size that meets the cover conditions wins.
    """
    solver = ensure(solver)
    k = a.depth()
    cover = [c.formula for c in enumerate_canonical(k, a.propositions(), a.agents, solver)]
    n_edges = sum(len(e) for e in a.relations.values())
    cost = len(a.events) * len(cover) + n_edges * len(cover) ** 2
    if cost > node_cap:
        raise SearchTooLarge(
            f"regular version over {len(cover)} canonical formulas needs about {cost} solver calls"
        )
    reg = regular_version(a, cover, solver)
    refined, _ = bisim_refine(reg, solver)
    problem = CoverProblem.from_model(refined, solver)
    log.info(
        "cover search: %d canonical formulas, %d refined events, %d to cover, %d candidate sets",
        len(cover), len(refined.events), len(problem.required), 2 ** len(problem.required) - 1,
    )
    family = problem.search(node_cap)
    log.info("cover search: %d events after %d nodes", len(family), problem.spent)
    return problem.build(family)


class CoverProblem:
    """Sets of events of a (refined, regular) model and the conditions on covers."""

    def __init__(self, model: ActionModel, q: dict, bad: dict):
        self.model = model
        self.q = q
        self.bad = bad
        self.agents = sorted(model.agents)
        events = model.sorted_events()
        self.index = {x: i for i, x in enumerate(events)}
        self.events = events
        reach = set(model.actual)
        stack = list(reach)
        while stack:
            x = stack.pop()
            for ag in self.agents:
                for y in q[(x, ag)]:
                    if y not in reach:
                        reach.add(y)
                        stack.append(y)
        self.required = frozenset(reach)
        self.spent = 0

    @classmethod
    def from_model(cls, model: ActionModel, solver: SolverHandle) -> "CoverProblem":
        q, bad = {}, {}
        for x in model.events:
            for ag in model.agents:
                r, qq = reach_sets(model, x, ag, solver)
                q[(x, ag)] = qq
                bad[(x, ag)] = r - qq
        return cls(model, q, bad)

    def q_of(self, s: frozenset, ag: str) -> frozenset:
        return frozenset().union(*(self.q[(x, ag)] for x in s))

    def bad_of(self, s: frozenset, ag: str) -> frozenset:
        return frozenset().union(*(self.bad[(x, ag)] for x in s))

    def admissible(self, s: frozenset, t: frozenset, ag: str) -> bool:
        return t.isdisjoint(self.bad_of(s, ag))

    def open_obligations(self, family: Sequence[frozenset]) -> list[tuple]:
        """Unmet conditions of a family as (event, allowed): some new set must
        contain the event and lie inside allowed."""
        e0 = self.model.actual & self.required
        obs = []
        for x in sorted(e0, key=sort_key):
            if not any(x in t and t <= e0 for t in family):
                obs.append((x, e0))
        for s in family:
            for ag in self.agents:
                allowed = self.required - self.bad_of(s, ag)
                for y in sorted(self.q_of(s, ag), key=sort_key):
                    if not any(y in t and t <= allowed for t in family):
                        obs.append((y, allowed))
        return obs

    def feasible(self, family: Sequence[frozenset]) -> bool:
        return not self.open_obligations(family)

    def search(self, node_cap: int = 10**6) -> list[frozenset]:
        """Smallest feasible family, by iterative deepening on its size.

        Each step picks the open obligation with the fewest allowed events and
        tries the sets meeting it, smallest first.  Candidate sets are
        generated lazily and counted against node_cap.
        """
        universe = sorted(self.required, key=sort_key)
        self.spent = 0
        if 2 ** len(universe) - 1 > node_cap:
            raise SearchTooLarge(
                f"cover search over {len(universe)} events has {2 ** len(universe) - 1} candidate sets, above {node_cap}"
            )

        def tick() -> None:
            self.spent += 1
            if self.spent > node_cap:
                raise SearchTooLarge(f"cover search exceeded {node_cap} nodes")

        def options(y, allowed: frozenset):
            rest = sorted(allowed - {y}, key=sort_key)
            for n in range(len(rest) + 1):
                for c in itertools.combinations(rest, n):
                    yield frozenset((y, *c))

        def dfs(family: list, budget: int, seen: set):
            tick()
            obs = self.open_obligations(family)
            if not obs:
                return family
            if budget == 0:
                return None
            y, allowed = min(obs, key=lambda ob: len(ob[1]))
            for t in options(y, allowed):
                tick()
                if t in family:
                    continue
                key = frozenset(family) | {t}
                if key in seen:
                    continue
                seen.add(key)
                found = dfs(family + [t], budget - 1, seen)
                if found is not None:
                    return found
            return None

        for size in range(len(universe) + 1):
            found = dfs([], size, set())
            if found is not None:
                return sorted(found, key=lambda s: (len(s), sorted(map(sort_key, s))))
        raise AssertionError("singleton covers are always feasible")

    def build(self, family: Sequence[frozenset]) -> ActionModel:
        m = self.model
        names = [f"y{i}" for i in range(len(family))]
        pre = {n: disj(m.pre[x] for x in sorted(s, key=sort_key)) for n, s in zip(names, family)}
        relations = {}
        for ag in self.agents:
            relations[ag] = {
                (names[i], names[j])
                for i, s in enumerate(family)
                for j, t in enumerate(family)
                if self.admissible(s, t, ag)
            }
        actual = frozenset(n for n, s in zip(names, family) if s <= m.actual)
        return ActionModel(tuple(names), pre, relations, actual, m.agents)
