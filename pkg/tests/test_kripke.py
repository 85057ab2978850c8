import random

import pytest

from amtk.action import ActionModel
from amtk.formula import Diamond, Not, Prop, parse, propositions_of
from amtk.kripke import KripkeModel, canonical_kripke, holds, kripke_bisimilar, product_update
from amtk.solver import SolverHandle
from generators import random_formula

p, q = Prop("p"), Prop("q")


def km(val, edges=(), actual=None, agents=("a",)):
    worlds = tuple(val)
    return KripkeModel(worlds, {w: frozenset(v) for w, v in val.items()}, {"a": set(edges)},
                       frozenset(actual if actual is not None else worlds[:1]), frozenset(agents))


def random_kripke(rng, n, props=("p", "q"), agents=("a", "b")):
    worlds = tuple(range(n))
    val = {w: frozenset(x for x in props if rng.random() < 0.5) for w in worlds}
    rel = {a: {(u, v) for u in worlds for v in worlds if rng.random() < 0.3} for a in agents}
    return KripkeModel(worlds, val, rel, frozenset([0]), frozenset(agents))


@pytest.fixture(scope="module")
def s():
    return SolverHandle()


def test_holds_examples():
    m = km({"w": {"p"}})
    assert holds(m, "w", parse("[a]q"))
    assert not holds(m, "w", parse("<a>p"))
    m2 = km({"w": set(), "v": {"p"}}, {("w", "v")})
    assert holds(m2, "w", parse("<a>p"))
    with pytest.raises(KeyError):
        holds(m, "nowhere", p)


def test_model_validation():
    with pytest.raises(ValueError):
        KripkeModel(("w",), {"w": set()}, {"a": {("w", "v")}}, frozenset(["w"]))
    with pytest.raises(ValueError):
        KripkeModel(("w",), {"w": set()}, {}, frozenset(["v"]))


def test_product_update_examples():
    m = km({"w": {"p"}})
    a = ActionModel.build({"x": p}, actual=["x"], agents=["a"])
    out = product_update(m, a)
    assert out.worlds == (("w", "x"),) and out.actual == {("w", "x")}
    assert out.valuation[("w", "x")] == {"p"} and not out.relations["a"]
    empty = product_update(m, ActionModel.build({"x": Not(p)}, actual=["x"], agents=["a"]))
    assert empty.worlds == ()
    m2 = km({"w": set(), "v": set()}, {("w", "v")})
    a2 = ActionModel.build({"x": parse("top"), "y": parse("top")}, {"a": {("x", "y")}}, ["x"], ["a"])
    assert (("w", "x"), ("v", "y")) in product_update(m2, a2).relations["a"]


def test_product_update_clauses_on_random_models():
    rng = random.Random(4)
    for _ in range(30):
        m = random_kripke(rng, rng.randint(1, 4))
        events = ("x0", "x1", "x2")
        pre = {x: random_formula(rng, ["p", "q"], ["a", "b"], 1, 2) for x in events}
        rel = {g: {(u, v) for u in events for v in events if rng.random() < 0.4} for g in ("a", "b")}
        act = ActionModel(events, pre, rel, frozenset(["x0"]), frozenset(["a", "b"]))
        out = product_update(m, act)
        expected = {(w, x) for w in m.worlds for x in events if holds(m, w, pre[x])}
        assert set(out.worlds) == expected
        for (w, x) in out.worlds:
            assert out.valuation[(w, x)] == m.valuation[w]
        for g in ("a", "b"):
            want = {(u, v) for u in expected for v in expected
                    if (u[0], v[0]) in m.relations[g] and (u[1], v[1]) in rel[g]}
            assert out.relations[g] == want
        assert out.actual == {(w, x) for (w, x) in expected if w in m.actual and x == "x0"}


def test_bisimilar_examples():
    m = km({"w": {"p"}, "v": set()}, {("w", "v")})
    assert kripke_bisimilar(m, m)[0]
    one_p = km({"w": {"p"}})
    one_q = km({"w": {"q"}})
    assert kripke_bisimilar(one_p, one_q) == (False, None)
    chain3 = km({"u": {"p"}, "v1": set(), "v2": set()}, {("u", "v1"), ("u", "v2")}, ["u"])
    ok, rel = kripke_bisimilar(m, chain3)
    assert ok and ("v", "v1") in rel and ("v", "v2") in rel and ("w", "u") in rel


def _relation_is_bisimulation(m, n, rel):
    for w, v in rel:
        if m.valuation[w] != n.valuation[v]:
            return False
        for a in m.agents | n.agents:
            for w2 in m.successors(a, w):
                if not any((w2, v2) in rel for v2 in n.successors(a, v)):
                    return False
            for v2 in n.successors(a, v):
                if not any((w2, v2) in rel for w2 in m.successors(a, w)):
                    return False
    return True


def _shrinking_fixpoint(m, n):
    """Greatest bisimulation by deleting violating pairs (independent oracle)."""
    rel = {(w, v) for w in m.worlds for v in n.worlds if m.valuation[w] == n.valuation[v]}
    while True:
        bad = set()
        for w, v in rel:
            for a in m.agents | n.agents:
                if any(not any((w2, v2) in rel for v2 in n.successors(a, v)) for w2 in m.successors(a, w)):
                    bad.add((w, v))
                if any(not any((w2, v2) in rel for w2 in m.successors(a, w)) for v2 in n.successors(a, v)):
                    bad.add((w, v))
        if not bad:
            return rel
        rel -= bad


def test_bisimilarity_matches_shrinking_fixpoint():
    rng = random.Random(8)
    for _ in range(80):
        m = random_kripke(rng, rng.randint(1, 4))
        n = random_kripke(rng, rng.randint(1, 4)) if rng.random() < 0.5 else m
        greatest = _shrinking_fixpoint(m, n)
        expect = all(any((w, v) in greatest for v in n.actual) for w in m.actual) and all(
            any((w, v) in greatest for w in m.actual) for v in n.actual)
        ok, rel = kripke_bisimilar(m, n)
        assert ok == expect
        if ok:
            assert set(rel) == greatest
            assert _relation_is_bisimulation(m, n, rel)


def test_bisimilar_worlds_agree_on_formulas():
    rng = random.Random(9)
    for _ in range(30):
        m, n = random_kripke(rng, 3), random_kripke(rng, 3)
        rel = _shrinking_fixpoint(m, n)
        fs = [random_formula(rng, ["p", "q"], ["a", "b"], 2, 4) for _ in range(10)]
        for w, v in rel:
            for f in fs:
                assert holds(m, w, f) == holds(n, v, f)


def test_bisimilarity_is_an_equivalence():
    rng = random.Random(10)
    models = [random_kripke(rng, rng.randint(1, 3), props=("p",), agents=("a",)) for _ in range(25)]
    bis = {(i, j): kripke_bisimilar(models[i], models[j])[0] for i in range(25) for j in range(25)}
    for i in range(25):
        assert bis[(i, i)]
        for j in range(25):
            assert bis[(i, j)] == bis[(j, i)]
            for k in range(25):
                if bis[(i, j)] and bis[(j, k)]:
                    assert bis[(i, k)]


def test_canonical_examples(s):
    c = canonical_kripke([p], s, ["a"])
    assert len(c.worlds) == 2 and c.actual == set(c.worlds)
    assert len(c.relations["a"]) == 4
    assert sorted(map(sorted, c.valuation.values())) == [["__atom_0", "p"], ["__atom_1"]] or sorted(
        map(sorted, c.valuation.values())) == [["__atom_0"], ["__atom_1", "p"]]
    e = canonical_kripke([], s, ["a"])
    assert len(e.worlds) == 1 and e.relations["a"] == {(0, 0)} and e.valuation[0] == {"__atom_0"}
    d = canonical_kripke([Diamond("a", p)], s)
    assert len(d.worlds) == 4


def test_canonical_edge_checks_agree(s):
    rng = random.Random(12)
    for _ in range(15):
        phis = [random_formula(rng, ["p", "q"], ["a", "b"], 2, 3) for _ in range(2)]
        fast = canonical_kripke(phis, s, ["a", "b"])
        slow = canonical_kripke(phis, s, ["a", "b"], edge_check="solver")
        assert fast == slow
        atoms = s.atoms(phis)
        assert len(fast.worlds) == len(atoms)
        fresh = [next(x for x in fast.valuation[w] if x.startswith("__atom_")) for w in fast.worlds]
        assert len(set(fresh)) == len(fresh)
        assert not set(fresh) & propositions_of(phis)
        for w, atom in zip(fast.worlds, atoms):
            for f in atom.members:
                assert holds(fast, w, f)
