"""Emulations between action models and the equivalence check built on them.

A relation is decided by the fixpoint iteration below: each pair of events
(x, y) starts with a finite set of candidate formulas and keeps only those
that force the back-and-forth conditions one step ahead.  The result is a
certificate (the surviving sets) or the actual event where it broke down.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from .action import ActionModel, EquivalenceIndex, sort_key
from .formula import TOP, And, Box, Formula, Implies, Not, conj, disj, render
from .kripke import canonical_kripke, kripke_bisimilar, product_update
from .solver import SolverHandle, ensure

ThetaAssignment = Mapping[tuple, tuple[Formula, ...]]

PRESETS = ("bisim", "prop_emu", "emu", "atoms", "hatset", "cover")
RELATIONS = {
    "bisim": "bisim",
    "prop_emu": "prop_emu",
    "emu": "emu",
    "equiv_atoms": "atoms",
    "equiv_hatset": "hatset",
    "equiv_cover": "cover",
}


@dataclass(frozen=True)
class Verdict:
    holds: bool
    iterations: int
    certificate: Mapping[tuple, tuple[Formula, ...]] | None
    failure: tuple[str, object] | None

    def to_json(self) -> dict:
        cert = None
        if self.certificate is not None:
            cert = [
                {"x": str(x), "y": str(y), "sigma": [render(f) for f in sigma]}
                for (x, y), sigma in sorted(
                    self.certificate.items(), key=lambda kv: (sort_key(kv[0][0]), sort_key(kv[0][1]))
                )
            ]
        failure = None
        if self.failure is not None:
            failure = {"condition": self.failure[0], "event": str(self.failure[1])}
        return {"holds": self.holds, "iterations": self.iterations, "certificate": cert, "failure": failure}


def all_preconditions(a: ActionModel, b: ActionModel) -> list[Formula]:
    return list(dict.fromkeys(a.preconditions() + b.preconditions()))


PARTITION_PRESETS = ("atoms", "cover")


def build_theta(
    preset: str,
    a: ActionModel,
    b: ActionModel,
    solver: SolverHandle | None = None,
    k: int | None = None,
) -> dict[tuple, tuple[Formula, ...]]:
    """Initial candidate sets for every pair (x, y) under one of the presets.

    The atoms and cover presets give every pair the same set, whose members
    are pairwise inconsistent with a valid disjunction.
    """
    solver = ensure(solver)
    pairs = [(x, y) for x in a.sorted_events() for y in b.sorted_events()]
    if preset == "bisim":
        return {(x, y): (TOP,) if solver.equivalent(a.pre[x], b.pre[y]) else () for x, y in pairs}
    if preset == "prop_emu":
        return {p: (TOP,) for p in pairs}
    if preset == "emu":
        return {(x, y): (And(a.pre[x], b.pre[y]),) for x, y in pairs}
    if preset == "atoms":
        theta = tuple(solver.atom_formulas(all_preconditions(a, b)))
    elif preset == "hatset":
        from .hatset import build_kappa

        theta = build_kappa(all_preconditions(a, b), a.agents | b.agents, solver).kappa
    elif preset == "cover":
        from .covermod import enumerate_canonical

        if k is None:
            k = max(a.depth(), b.depth())
        props = a.propositions() | b.propositions()
        theta = tuple(c.formula for c in enumerate_canonical(k, props, a.agents | b.agents, solver))
    else:
        raise ValueError(f"unknown preset {preset!r}")
    return {p: theta for p in pairs}


def _lambda(a: ActionModel, b: ActionModel, agent: str, x, y, eta: dict) -> Formula:
    xs = a.successors(agent, x)
    ys = b.successors(agent, y)
    forth = [Implies(a.pre[x2], disj(And(b.pre[y2], eta[(x2, y2)]) for y2 in ys)) for x2 in xs]
    back = [Implies(b.pre[y2], disj(And(a.pre[x2], eta[(x2, y2)]) for x2 in xs)) for y2 in ys]
    return conj(forth + back)


def _zig0(a: ActionModel, b: ActionModel, eta: dict, solver: SolverHandle):
    for x in a.sorted_events():
        if x not in a.actual:
            continue
        target = disj(And(b.pre[y], eta[(x, y)]) for y in b.sorted_events() if y in b.actual)
        if not solver.entails(a.pre[x], target):
            return x
    return None


def iterate_emulation(
    a: ActionModel,
    b: ActionModel,
    theta: ThetaAssignment,
    solver: SolverHandle | None = None,
    jobs: int = 1,
    max_iterations: int | None = None,
    partition: tuple[Formula, ...] | None = None,
    trace: list | None = None,
) -> Verdict:
    """Fixpoint iteration over candidate sets; see the module docstring.

    When every candidate set is drawn from ``partition`` (pairwise
    inconsistent members, valid disjunction), a large set S is written as the
    negated disjunction of the members missing from S.  The solver only sees
    these sets under a negation, where the short disjunction is far cheaper
    than a long conjunction of negated members.  When given, trace receives
    the candidate sets at the start of every round.
    """
    solver = ensure(solver)
    pairs = [(x, y) for x in a.sorted_events() for y in b.sorted_events()]
    sigma = {p: tuple(theta.get(p, ())) for p in pairs}
    agents = sorted(a.agents | b.agents)

    def join(s: tuple) -> Formula:
        if partition is None or len(s) <= 1:
            return disj(s)
        kept = set(s)
        return Not(disj(f for f in partition if f not in kept))

    iterations = 0
    while True:
        iterations += 1
        if trace is not None:
            trace.append(dict(sigma))
        eta = {p: join(s) for p, s in sigma.items()}
        bad = _zig0(a, b, eta, solver)
        if bad is not None:
            return Verdict(False, iterations, None, ("zig0", bad))
        eta_t = {(y, x): f for (x, y), f in eta.items()}
        bad = _zig0(b, a, eta_t, solver)
        if bad is not None:
            return Verdict(False, iterations, None, ("zag0", bad))

        def step(pair, handle):
            x, y = pair
            kept = sigma[pair]
            for agent in agents:
                if not kept:
                    break
                lam = _lambda(a, b, agent, x, y, eta)
                if lam is TOP:
                    continue
                goal = Box(agent, lam)
                kept = tuple(t for t in kept if handle.entails(t, goal))
            return kept

        if jobs > 1:
            handles = [SolverHandle(budget=solver.budget) for _ in range(jobs)]
            chunks = [pairs[i::jobs] for i in range(jobs)]
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                parts = pool.map(lambda i: [(p, step(p, handles[i])) for p in chunks[i]], range(jobs))
                new = dict(item for part in parts for item in part)
        else:
            new = {p: step(p, solver) for p in pairs}
        if new == sigma:
            return Verdict(True, iterations, sigma, None)
        sigma = new
        if max_iterations is not None and iterations >= max_iterations:
            raise RuntimeError("emulation iteration did not stabilise")


def check_relation(
    a: ActionModel,
    b: ActionModel,
    relation: str,
    solver: SolverHandle | None = None,
    jobs: int = 1,
    k: int | None = None,
) -> Verdict:
    """Decide one of bisim, prop_emu, emu, equiv_atoms, equiv_hatset, equiv_cover.

    k sets the canonical-formula level for equiv_cover; it defaults to the
    largest precondition depth and may not be smaller.
    """
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    solver = ensure(solver)
    preset = RELATIONS[relation]
    if k is not None and k < max(a.depth(), b.depth()):
        raise ValueError(f"level {k} is below the precondition depth {max(a.depth(), b.depth())}")
    theta = build_theta(preset, a, b, solver, k=k)
    partition = None
    if preset in PARTITION_PRESETS and theta:
        partition = next(iter(theta.values()))
    return iterate_emulation(a, b, theta, solver, jobs=jobs, partition=partition)


def oracle_equivalent(a: ActionModel, b: ActionModel, solver: SolverHandle | None = None) -> bool:
    """Equivalence via the canonical Kripke model and Kripke bisimilarity.

    Shares no code with the iteration above: both models are applied to the
    canonical model over all preconditions and the products are compared.
    """
    solver = ensure(solver)
    m = canonical_kripke(all_preconditions(a, b), solver, agents=a.agents | b.agents)
    return kripke_bisimilar(product_update(m, a), product_update(m, b))[0]


def check_certificate(
    a: ActionModel, b: ActionModel, sigma: ThetaAssignment, solver: SolverHandle | None = None
) -> bool:
    """Re-check that the disjunctions of sigma satisfy the four emulation conditions.

    Conditions are tested one successor at a time, not through the combined
    formula used by the iteration.
    """
    solver = ensure(solver)
    eta = {p: disj(s) for p, s in sigma.items()}
    agents = sorted(a.agents | b.agents)
    for x in a.actual:
        if not solver.entails(a.pre[x], disj(And(b.pre[y], eta[(x, y)]) for y in b.actual)):
            return False
    for y in b.actual:
        if not solver.entails(b.pre[y], disj(And(a.pre[x], eta[(x, y)]) for x in a.actual)):
            return False
    for (x, y), e in eta.items():
        for ag in agents:
            for x2 in a.successors(ag, x):
                need = Implies(a.pre[x2], disj(And(b.pre[y2], eta[(x2, y2)]) for y2 in b.successors(ag, y)))
                if not solver.entails(e, Box(ag, need)):
                    return False
            for y2 in b.successors(ag, y):
                need = Implies(b.pre[y2], disj(And(a.pre[x2], eta[(x2, y2)]) for x2 in a.successors(ag, x)))
                if not solver.entails(e, Box(ag, need)):
                    return False
    return True


def action_bisimilar(a: ActionModel, b: ActionModel, solver: SolverHandle | None = None) -> bool:
    """Guarded action-model bisimilarity, computed on the disjoint union.

    Related events have equivalent preconditions, and only successors whose
    guard Pre(x) & <a>Pre(x') is satisfiable must be matched.
    """
    from .action import reach_sets

    solver = ensure(solver)
    classes = EquivalenceIndex(solver)
    nodes = [(0, x) for x in a.sorted_events()] + [(1, y) for y in b.sorted_events()]
    models = (a, b)
    agents = sorted(a.agents | b.agents)
    q = {(i, x, ag): reach_sets(models[i], x, ag, solver)[1] for i, x in nodes for ag in agents}
    block = {(i, x): classes.index(models[i].pre[x]) for i, x in nodes}
    count = len(set(block.values()))
    while True:
        sigs: dict = {}
        new = {}
        for i, x in nodes:
            sig = (block[(i, x)],) + tuple(frozenset(block[(i, z)] for z in q[(i, x, ag)]) for ag in agents)
            new[(i, x)] = sigs.setdefault(sig, len(sigs))
        block = new
        if len(sigs) == count:
            break
        count = len(sigs)
    return {block[(0, x)] for x in a.actual} == {block[(1, y)] for y in b.actual}
