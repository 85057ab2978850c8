import itertools
import random

import pytest

from amtk.action import ActionModel
from amtk.covermod import count_canonical, enumerate_canonical, mu, nabla, reduce_depth
from amtk.emulation import check_relation, oracle_equivalent
from amtk.formula import BOT, TOP, And, Box, Diamond, Not, Prop, depth, disj, parse
from amtk.solver import SolverHandle
from generators import random_formula

p, q = Prop("p"), Prop("q")


@pytest.fixture(scope="module")
def s():
    return SolverHandle()


def test_nabla_examples(s):
    assert s.equivalent(nabla("a", [p, Not(p)]), parse("[a](p | ~p) & <a>p & <a>~p"))
    assert nabla("a", []) == Box("a", BOT)
    assert s.equivalent(nabla("a", [TOP]), Diamond("a", TOP))


def test_enumeration_counts(s):
    assert [c.formula for c in enumerate_canonical(-1, ["p"], ["a"], s)] == [TOP]
    level0 = enumerate_canonical(0, ["p"], ["a"], s)
    assert {c.formula for c in level0} == {p, Not(p)}
    assert count_canonical(1, 1, 1) == 8
    assert len(enumerate_canonical(1, ["p"], ["a"], s, prune=False)) == 8
    assert len(enumerate_canonical(1, ["p"], ["a"], s)) == 8
    with pytest.raises(ValueError):
        enumerate_canonical(2, ["p", "q"], ["a"], s)


@pytest.mark.parametrize("k, props", [(0, ["p"]), (0, ["p", "q"]), (1, ["p"]), (1, ["p", "q"])])
def test_partition_property(s, k, props):
    members = [c.formula for c in enumerate_canonical(k, props, ["a"], s)]
    for f, g in itertools.combinations(members, 2):
        assert not s.satisfiable(f, g)
    assert s.is_valid(disj(members))


def test_every_formula_is_the_disjunction_of_its_filter(s):
    rng = random.Random(41)
    for k in (0, 1):
        members = [c.formula for c in enumerate_canonical(k, ["p", "q"], ["a"], s)]
        for _ in range(40):
            f = random_formula(rng, ["p", "q"], ["a"], k, 3)
            assert s.equivalent(f, disj(s.gamma_filter(f, members)))


def test_mu_examples(s):
    props, agents = ["p"], ["a"]
    level0 = enumerate_canonical(0, props, agents, s)
    pos = next(c for c in level0 if c.valuation == {"p"})
    lifted = mu(pos, 1, props, agents, s)
    assert s.equivalent(lifted.formula, And(p, nabla("a", [c.formula for c in level0])))
    for k in (0, 1):
        for xi in enumerate_canonical(k, props, agents, s):
            assert s.equivalent(mu(xi, k, props, agents, s).formula, xi.formula)
            for level in range(k, 3):
                assert s.entails(mu(xi, level, props, agents, s).formula, xi.formula)
    with pytest.raises(ValueError):
        mu(lifted, 0, props, agents, s)


def test_reduce_depth_examples(s):
    a = ActionModel.build({"x": p}, actual=["x"], agents=["a"])
    b = ActionModel.build({"y": parse("p & [a](p | ~p)")}, actual=["y"], agents=["a"])
    c = reduce_depth(a, b, s)
    assert s.equivalent(c.pre["y"], p) and depth(c.pre["y"]) == 0
    b2 = ActionModel.build({"y": parse("p & ~p & [a]p")}, actual=["y"], agents=["a"])
    assert reduce_depth(a, b2, s).pre["y"] is BOT
    with pytest.raises(ValueError):
        reduce_depth(a, a, s)


def test_reduce_depth_preserves_equivalence(s):
    rng = random.Random(42)
    checked = 0
    for _ in range(60):
        a = ActionModel.build({"x0": random_formula(rng, ["p"], ["a"], 0, 2),
                               "x1": random_formula(rng, ["p"], ["a"], 0, 2)},
                              {"a": {("x0", "x1")}}, ["x0"], ["a"])
        if a.depth() != 0:
            continue
        # depth-1 variant of a: pad each precondition with a valid box
        b = ActionModel.build({f"y{i}": And(a.pre[f"x{i}"], parse("[a](p | ~p)")) for i in range(2)},
                              {"a": {("y0", "y1")}}, ["y0"], ["a"])
        if rng.random() < 0.3:
            b = ActionModel.build({"y0": parse("[a]p"), "y1": p}, {"a": {("y0", "y1")}}, ["y0"], ["a"])
        if not check_relation(a, b, "equiv_atoms", s).holds:
            continue
        c = reduce_depth(a, b, s)
        assert c.depth() <= a.depth()
        assert check_relation(a, c, "equiv_atoms", s).holds
        assert oracle_equivalent(a, c, s)
        checked += 1
    assert checked >= 20


def test_canonical_formulas_are_known_one_level_down(s):
    # a member that forces [a]xi also forces [a] of the members of E_j entailing xi
    rng = random.Random(42)
    for k, j in ((0, -1), (0, 0), (1, 0), (1, 1)):
        members = [c.formula for c in enumerate_canonical(k, ["p"], ["a"], s)]
        lower = [c.formula for c in enumerate_canonical(j, ["p"], ["a"], s)]
        forced = 0
        for _ in range(30):
            xi = random_formula(rng, ["p"], ["a"], max(j, 0), 3)
            for f in members:
                if s.entails(f, Box("a", xi)):
                    forced += 1
                    assert s.entails(f, Box("a", disj(s.gamma_filter(xi, lower))))
        assert forced > 0
