"""Canonical formulas built from the cover modality, and depth reduction.

nabla_a(S) = [a](OR S) & AND_{s in S} <a>s, with nabla_a({}) = [a]bot.
Level -1 is {top}; level 0 holds the full valuations over P; level k
combines a valuation with one nabla_a(S_a) per agent, S_a a subset of level k-1.
Members of one level are pairwise inconsistent and their disjunction is valid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from .action import ActionModel
from .formula import BOT, TOP, Box, Diamond, Formula, Not, Prop, conj, disj
from .solver import SolverHandle, ensure

DEFAULT_CAP = 10**5


@dataclass(frozen=True, eq=False)
class CanonicalFormula:
    depth: int
    valuation: frozenset[str] | None
    successors: tuple[tuple[str, tuple["CanonicalFormula", ...]], ...]
    formula: Formula

    def successor_set(self, agent: str) -> tuple["CanonicalFormula", ...]:
        return dict(self.successors).get(agent, ())


def nabla(agent: str, formulas: Iterable[Formula]) -> Formula:
    formulas = list(formulas)
    if not formulas:
        return Box(agent, BOT)
    return conj([Box(agent, disj(formulas))] + [Diamond(agent, f) for f in formulas])


def valuation_formula(props: Iterable[str], true: frozenset[str]) -> Formula:
    return conj(Prop(p) if p in true else Not(Prop(p)) for p in sorted(props))


def _powerset(items: list) -> list[tuple]:
    return [c for r in range(len(items) + 1) for c in itertools.combinations(items, r)]


_levels: dict = {}


def count_canonical(k: int, n_props: int, n_agents: int) -> int:
    """Number of level-k members before pruning."""
    if k < 0:
        return 1
    if k == 0:
        return 2**n_props
    return 2**n_props * (2 ** count_canonical(k - 1, n_props, n_agents)) ** n_agents


def enumerate_canonical(
    k: int,
    props: Iterable[str],
    agents: Iterable[str],
    solver: SolverHandle | None = None,
    cap: int = DEFAULT_CAP,
    prune: bool = True,
) -> list[CanonicalFormula]:
    """Canonical formulas of level k over props and agents, in a fixed order."""
    props = tuple(sorted(set(props)))
    agents = tuple(sorted(set(agents)))
    if k < -1:
        raise ValueError("level must be at least -1")
    key = (k, props, agents, prune)
    hit = _levels.get(key)
    if hit is not None:
        return hit
    solver = ensure(solver)
    if k == -1:
        out = [CanonicalFormula(-1, None, (), TOP)]
    elif k == 0:
        out = []
        for bits in itertools.product((True, False), repeat=len(props)):
            true = frozenset(p for p, b in zip(props, bits) if b)
            out.append(CanonicalFormula(0, true, (), valuation_formula(props, true)))
    else:
        total = 2 ** len(props) * (2 ** len(enumerate_canonical(k - 1, props, agents, solver, cap, prune))) ** len(agents)
        if total > cap:
            raise ValueError(f"level {k} over {len(props)} propositions and {len(agents)} agents has {total} members, above cap {cap}")
        lower = enumerate_canonical(k - 1, props, agents, solver, cap, prune)
        subsets = _powerset(lower)
        out = []
        for psi in enumerate_canonical(0, props, agents, solver, cap, prune):
            for choice in itertools.product(subsets, repeat=len(agents)):
                parts = [psi.formula] + [nabla(a, [c.formula for c in s]) for a, s in zip(agents, choice)]
                f = conj(parts)
                if prune and not solver.satisfiable(f):
                    continue
                out.append(CanonicalFormula(k, psi.valuation, tuple(zip(agents, choice)), f))
    _levels[key] = out
    return out


def mu(
    xi: CanonicalFormula,
    level: int,
    props: Iterable[str],
    agents: Iterable[str],
    solver: SolverHandle | None = None,
) -> CanonicalFormula:
    """Lift a level-k canonical formula to level l >= k with the same content.

    Each successor set S is replaced by the level l-1 members entailing OR S;
    at level 0 the successor sets are read as {top}.
    """
    solver = ensure(solver)
    if xi.depth < 0:
        raise ValueError("cannot lift the level -1 formula")
    if level < xi.depth:
        raise ValueError("target level below the formula's level")
    props = tuple(sorted(set(props)))
    agents = tuple(sorted(set(agents)))
    if level == 0:
        return xi
    lower = enumerate_canonical(level - 1, props, agents, solver)
    parts = [valuation_formula(props, xi.valuation)]
    succ = []
    for a in agents:
        if xi.depth == 0:
            chosen = tuple(lower)
        else:
            cover = disj(c.formula for c in xi.successor_set(a))
            chosen = tuple(c for c in lower if solver.entails(c.formula, cover))
        succ.append((a, chosen))
        parts.append(nabla(a, [c.formula for c in chosen]))
    return CanonicalFormula(level, xi.valuation, tuple(succ), conj(parts))


def reduce_depth(a: ActionModel, b: ActionModel, solver: SolverHandle | None = None) -> ActionModel:
    """Rewrite b's preconditions into depth(a) when depth(a) < depth(b).

    The result has b's frame and Pre(y) = OR of the level-k members xi whose
    lift to level l entails b's precondition of y.
    """
    solver = ensure(solver)
    k, l = a.depth(), b.depth()
    if not k < l:
        raise ValueError(f"depth ordering violated: need depth(a)={k} < depth(b)={l}")
    props = a.propositions() | b.propositions()
    agents = a.agents | b.agents
    level_k = enumerate_canonical(k, props, agents, solver)
    lifted = [(xi, mu(xi, l, props, agents, solver)) for xi in level_k]
    pre = {
        y: disj(xi.formula for xi, up in lifted if solver.entails(up.formula, b.pre[y]))
        for y in b.events
    }
    return ActionModel(b.events, pre, b.relations, b.actual, b.agents)
