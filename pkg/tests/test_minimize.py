import itertools
import random

import pytest

from amtk.action import ActionModel
from amtk.emulation import action_bisimilar, check_relation, oracle_equivalent
from amtk.formula import TOP, Not, Prop, disj, parse
from amtk.minimize import (
    CoverProblem,
    SearchTooLarge,
    minimal_formula_basis,
    minimize_bisimulation,
    minimize_equivalence,
    minimize_prop_emulation,
)
from amtk.solver import SolverHandle
from cover_oracle import minimum_cover_size
from generators import random_action_model, random_formula
from minimality import minimum_basis_size, smaller_prop_emulating_model_exists

p, q = Prop("p"), Prop("q")


@pytest.fixture(scope="module")
def s():
    return SolverHandle()


def _is_basis(s, fs, basis):
    return all(s.equivalent(f, disj(g for g in basis if s.entails(g, f))) for f in fs)


def gadget(texts):
    pre, rel = {}, set()
    for i, t in enumerate(texts):
        pre[f"u{i}"] = TOP
        pre[f"v{i}"] = parse(t)
        rel.add((f"u{i}", f"v{i}"))
    return ActionModel.build(pre, {"a": rel}, [f"u{i}" for i in range(len(texts))], ["a"])


def test_basis_examples(s):
    assert minimal_formula_basis([p], s) == [p]
    fs = [p, q, parse("p | q")]
    basis = minimal_formula_basis(fs, s)
    assert len(basis) == 2 and _is_basis(s, fs, basis)
    assert {frozenset(s.gamma_filter(b, [p, q])) for b in basis} == {frozenset([p]), frozenset([q])}
    fs = [parse("p & q"), parse("p & ~q"), p]
    basis = minimal_formula_basis(fs, s)
    assert len(basis) == 2
    assert all(any(s.equivalent(b, f) for f in fs[:2]) for b in basis)


def test_basis_is_minimal_against_truth_tables(s):
    rng = random.Random(51)
    for _ in range(40):
        fs = [random_formula(rng, ["p", "q"], [], 0, rng.randint(1, 3)) for _ in range(rng.randint(1, 4))]
        basis = minimal_formula_basis(fs, s)
        assert _is_basis(s, fs, basis)
        assert len(basis) == minimum_basis_size(fs)


def test_bisimulation_examples(s):
    twins = ActionModel.build({"x": p, "y": p, "x2": q, "y2": q},
                              {"a": {("x", "x2"), ("y", "y2")}}, ["x", "y"], ["a"])
    assert minimize_bisimulation(twins, s).size() == 2
    minimal = ActionModel.build({"x": p, "y": q}, {"a": {("x", "y")}}, ["x"], ["a"])
    assert minimize_bisimulation(minimal, s).size() == 2
    dead = ActionModel.build({"x": parse("[a]~q"), "y": q, "z": p}, {"a": {("x", "y")}}, ["x"], ["a"])
    assert minimize_bisimulation(dead, s).events == ("x",)


def test_prop_emulation_examples(s):
    fan = ActionModel.build({"e0": TOP, "e1": p, "e2": p}, {"a": {("e0", "e1"), ("e0", "e2")}}, ["e0"], ["a"])
    out = minimize_prop_emulation(fan, s)
    assert out.size() == 2
    assert minimize_prop_emulation(out, s).size() == 2
    g = minimize_prop_emulation(gadget(["p", "q", "p | q"]), s)
    successors = {y for x in g.actual for y in g.successors("a", x)}
    assert len(successors) == 2 == minimum_basis_size([p, q, parse("p | q")])


def _sample(seed, n, props=("p", "q"), depths=(0, 1)):
    rng = random.Random(seed)
    return [random_action_model(rng, rng.randint(1, 4), list(props), rng.choice([["a"], ["a", "b"]]),
                                rng.choice(depths), size=2) for _ in range(n)]


def test_minimizers_preserve_their_relation(s):
    for a in _sample(52, 40):
        mb = minimize_bisimulation(a, s)
        assert action_bisimilar(a, mb, s) and oracle_equivalent(a, mb, s)
        mp = minimize_prop_emulation(a, s)
        assert check_relation(a, mp, "prop_emu", s).holds
        assert minimize_prop_emulation(mp, s).size() == mp.size()
        assert mb.size() >= mp.size()


def test_prop_emulation_output_is_minimal(s):
    rng = random.Random(53)
    wanted = {2: 3, 3: 3}
    while any(wanted.values()):
        a = random_action_model(rng, rng.randint(2, 3), ["p"], ["a"], 0, size=2)
        out = minimize_prop_emulation(a, s)
        if not wanted.get(out.size()):
            continue
        assert not smaller_prop_emulating_model_exists(a, out.size() - 1, s, ["p"])
        wanted[out.size()] -= 1


def test_equivalence_examples(s):
    split = ActionModel.build({"x": p, "y": Not(p)}, {}, ["x", "y"], ["a"])
    out = minimize_equivalence(split, s)
    assert out.size() == 1 and s.is_valid(out.pre[out.events[0]])
    one = ActionModel.build({"x": q}, {}, ["x"], ["a"])
    assert minimize_equivalence(one, s).size() == 1


def test_singleton_covers_are_feasible(s):
    for a in _sample(54, 20, props=("p",), depths=(0,)):
        from cover_oracle import refined_model

        m = refined_model(a, s)
        problem = CoverProblem.from_model(m, s)
        assert problem.feasible([frozenset([x]) for x in problem.required])


def test_equivalence_minimizer_against_brute_force(s):
    sizes = []
    for a in _sample(55, 40, props=("p",), depths=(0,)):
        out = minimize_equivalence(a, s)
        assert oracle_equivalent(a, out, s)
        assert out.size() <= a.size()
        assert out.size() == minimum_cover_size(a, s)
        sizes.append((minimize_bisimulation(a, s).size(), minimize_prop_emulation(a, s).size(), out.size()))
    assert all(b >= pe >= e for b, pe, e in sizes)


def test_equivalence_search_reports_oversized_instances(s):
    big = ActionModel.build({"x": parse("[a]p | [a]q"), "y": parse("<a>(p & q)")},
                            {"a": {("x", "y"), ("y", "x")}}, ["x"], ["a"])
    with pytest.raises(SearchTooLarge):
        minimize_equivalence(big, s, node_cap=1000)
