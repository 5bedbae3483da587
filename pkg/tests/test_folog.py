from __future__ import annotations

import itertools
import random

import pytest

import corpus
from teamlogic import folog as F, mc
from teamlogic.formula import FormulaError, parse

VARS = ("x", "y")


def random_fo(rng: random.Random, depth: int, flat: bool = False):
    if depth <= 0 or rng.random() < 0.25:
        kinds = ["rel", "nrel", "eq", "neq"] + ([] if flat else ["dep", "dep"])
        k = rng.choice(kinds)
        v, w = rng.choice(VARS), rng.choice(VARS)
        if k == "rel":
            return F.Rel("E", (v, w)) if rng.random() < 0.5 else F.Rel("P", (v,))
        if k == "nrel":
            return F.NRel("E", (v, w)) if rng.random() < 0.5 else F.NRel("P", (v,))
        if k == "eq":
            return F.Eq(v, w)
        if k == "neq":
            return F.NEq(v, w)
        dets = tuple(d for d in VARS if rng.random() < 0.5)
        return F.FDep(dets, v)
    k = rng.choice(["and", "or", "cor", "ex", "all"])
    if k in ("ex", "all"):
        sub = random_fo(rng, depth - 1, flat)
        return F.Exists(rng.choice(VARS), sub) if k == "ex" else F.Forall(rng.choice(VARS), sub)
    node = {"and": F.FAnd, "or": F.FOr, "cor": F.FCor}[k]
    if flat and node is F.FCor:
        node = F.FOr
    return node(random_fo(rng, depth - 1, flat), random_fo(rng, depth - 1, flat))


def random_fo_structure(rng: random.Random, n: int) -> F.FoStructure:
    U = tuple(range(n))
    return F.FoStructure(U, {"P": {(u,) for u in U if rng.random() < 0.5},
                             "E": {p for p in itertools.product(U, U) if rng.random() < 0.4}},
                         {"P": 1, "E": 2})


def random_team(rng, a) -> F.FoTeam:
    rows = [r for r in itertools.product(a.universe, repeat=2) if rng.random() < 0.5]
    return F.FoTeam(VARS, frozenset(rows))


# --- syntax -------------------------------------------------------------------------------

@pytest.mark.parametrize("text", [
    "E x/{y}. (x = y & dep(x;y))", "A x. E>=2 y. E(x,y)", "E<2 y. !P(y)",
    "x != y \\/ !dep(;x)", "true & false", "A x. (P(x) | !P(x))",
])
def test_parse_render_round_trip(text):
    f = F.fo_parse(text)
    assert F.fo_parse(F.fo_render(f)) == f


def test_random_round_trip():
    rng = random.Random(1)
    for _ in range(300):
        f = random_fo(rng, 4)
        assert F.fo_parse(F.fo_render(f)) == f


def test_quantifier_scopes_right():
    f = F.fo_parse("E x. P(x) & Q(x)")
    assert isinstance(f, F.Exists) and isinstance(f.sub, F.FAnd)


@pytest.mark.parametrize("text", ["E . P(x)", "P(x", "x ==", "E>= x. P(x)", "dep(x y)"])
def test_parse_errors(text):
    with pytest.raises(FormulaError):
        F.fo_parse(text)


def test_free_vars():
    assert F.free_vars(F.fo_parse("E x. (E(x,y) & dep(z;x))")) == {"y", "z"}
    assert F.free_vars(F.fo_parse("A x. P(x)")) == frozenset()


def test_counting_quantifier_validation():
    with pytest.raises(FormulaError):
        F.Count("x", "==", 1, F.FTrue())


# --- semantics ------------------------------------------------------------------------------

def test_flat_formulas_are_evaluated_pointwise():
    rng = random.Random(2)
    for _ in range(300):
        a = random_fo_structure(rng, rng.randint(1, 3))
        f = random_fo(rng, 3, flat=True)
        X = random_team(rng, a)
        expected = all(F.tarski(a, dict(zip(VARS, s)), f) for s in X.assignments)
        assert F.fo_eval(a, X, f) == expected, F.fo_render(f)


def test_downward_closure_and_empty_team():
    rng = random.Random(3)
    for _ in range(150):
        a = random_fo_structure(rng, 2)
        f = random_fo(rng, 3)
        if any(isinstance(g, F.FNegDep) for g in F._nodes(f)):
            continue
        X = random_team(rng, a)
        assert F.fo_eval(a, F.FoTeam(VARS, frozenset()), f)
        if F.fo_eval(a, X, f):
            rows = list(X.assignments)
            for r in range(len(rows)):
                for sub in itertools.combinations(rows, r):
                    assert F.fo_eval(a, F.FoTeam(VARS, frozenset(sub)), f)


def test_locality_of_free_variables():
    rng = random.Random(4)
    for _ in range(150):
        a = random_fo_structure(rng, 2)
        f = random_fo(rng, 3)
        f = F.Exists("y", f) if "y" in F.free_vars(f) else f
        X = random_team(rng, a)
        # drop y: the formula only sees x
        Xx = F.FoTeam(("x",), frozenset((s[0],) for s in X.assignments))
        assert F.fo_eval(a, X, f) == F.fo_eval(a, Xx, f), F.fo_render(f)


def test_dependence_atom():
    a = F.FoStructure((0, 1), {})
    dep = F.fo_parse("dep(x;y)")
    assert F.fo_eval(a, F.FoTeam.of(VARS, [(0, 1), (1, 1), (1, 1)]), dep)
    assert not F.fo_eval(a, F.FoTeam.of(VARS, [(0, 1), (0, 0)]), dep)
    assert F.fo_eval(a, F.FoTeam.of(VARS, [(0, 1), (0, 0)]), F.fo_parse("dep(x;y) | dep(x;y)"))


def test_slashed_quantifier():
    a = F.FoStructure((0, 1), {})
    X = F.FoTeam.of(("x",), [(0,), (1,)])
    assert F.fo_eval(a, X, F.fo_parse("E y. x = y"))
    assert not F.fo_eval(a, X, F.fo_parse("E y/{x}. x = y"))


def test_counting_quantifiers():
    a = F.FoStructure((0, 1, 2), {"P": {(0,), (2,)}})
    unit = F.FoTeam.unit()
    assert F.fo_eval(a, unit, F.fo_parse("E>=2 x. P(x)"))
    assert not F.fo_eval(a, unit, F.fo_parse("E>=3 x. P(x)"))
    assert F.fo_eval(a, unit, F.fo_parse("E<3 x. P(x)"))


def test_eval_errors():
    a = F.FoStructure((0,), {"P": {(0,)}})
    with pytest.raises(FormulaError):
        F.fo_eval(a, F.FoTeam.unit(), F.fo_parse("P(x)"))
    with pytest.raises(FormulaError):
        F.fo_eval(a, F.FoTeam.of(("x",), [(0,)]), F.fo_parse("Q(x)"))
    with pytest.raises(FormulaError):
        F.fo_eval(a, F.FoTeam.of(("x",), [(0,)]), F.fo_parse("P(x,x)"))


def test_structure_validation():
    with pytest.raises(FormulaError):
        F.FoStructure((0, 0))
    with pytest.raises(FormulaError):
        F.FoStructure((0,), {"P": {(1,)}})
    with pytest.raises(FormulaError):
        F.FoStructure((0,), {"T": {(0, 0, 0)}})
    with pytest.raises(FormulaError):
        F.FoTeam(("x",), frozenset({(0, 1)}))


# --- translations ----------------------------------------------------------------------------

def test_translations_agree_on_random_instances():
    rng = random.Random(5)
    for _ in range(200):
        a = random_fo_structure(rng, 2)
        f = random_fo(rng, 3)
        g = F.translate_d2_to_if2(f)
        h = F.translate_if2_to_d3(g)
        X = random_team(rng, a)
        v = F.fo_eval(a, X, f)
        assert F.fo_eval(a, X, g) == v and F.fo_eval(a, X, h) == v, F.fo_render(f)


def test_translations_reject_extra_variables():
    with pytest.raises(FormulaError):
        F.translate_d2_to_if2(F.fo_parse("dep(x;z)"))
    with pytest.raises(FormulaError):
        F.translate_d_to_eso(F.fo_parse("E z. P(z)"))


def test_eso_translation_shape():
    e = F.translate_d_to_eso(F.fo_parse("dep(x;y)"))
    assert e.team_vars == ("x", "y")
    assert e.team_relation == "R"
    s = F.translate_d_to_eso(F.fo_parse("A x. P(x)"))
    assert s.team_vars == ()


def test_eso_agrees_with_team_semantics():
    rng = random.Random(6)
    for text in ("dep(x;y)", "dep(;x) | dep(;y)", "E y. (dep(;y) & E(x,y))"):
        f = F.fo_parse(text)
        e = F.translate_d_to_eso(f)
        for _ in range(10):
            a = random_fo_structure(rng, 2)
            X = random_team(rng, a)
            assert F.eso_holds(a, X, e) == F.fo_eval(a, X, f), text


def test_mdl_to_d2_agrees_with_model_checking():
    rng = random.Random(7)
    ops = ("box", "diamond", "and", "dep-or", "classical-or", "neg", "top", "bot", "dep")
    for _ in range(200):
        k = corpus.random_structure(rng, rng.randint(1, 3))
        t = [w for w in k.worlds if rng.random() < 0.6]
        f = corpus.random_formula(rng, 3, ops, max_arity=1)
        a, X, g = F.translate_mdl_to_d2(f, k, t)
        assert F.CONST_ELEMENT in a.universe
        assert F.fo_eval(a, X, g) == mc.eval(k, t, f), f


def test_mdl_to_d2_rejects_reserved_names():
    k = corpus.random_structure(random.Random(0), 2, props=("C", "p"))
    with pytest.raises(FormulaError):
        F.translate_mdl_to_d2(parse("p"), k, k.worlds)


# --- grids and tilings ------------------------------------------------------------------------

def test_gen_grid_shape():
    g = F.gen_grid(2, 1)
    assert len(g.universe) == 6
    assert ("0_0", "1_0") in g.relations["H"] and ("0_0", "0_1") in g.relations["V"]
    assert len(g.relations["H"]) == 4 and len(g.relations["V"]) == 3
    with pytest.raises(FormulaError):
        F.gen_grid(-1, 0)


def test_grid_axioms():
    for m, n in ((0, 0), (1, 2), (3, 3)):
        g = F.gen_grid(m, n)
        assert F.violated_conjuncts(g) == []
        assert F.fo_eval(g, F.FoTeam.unit(), F.gen_phi_grid())
        assert not F.fo_eval(g, F.FoTeam.unit(), F.gen_phi_infgrid())


def test_grid_axioms_catch_broken_grids():
    g = F.gen_grid(2, 2)
    swapped = F.FoStructure(g.universe, {"H": g.relations["V"] | {("0_0", "1_0")},
                                         "V": g.relations["V"]}, g.arities)
    assert F.violated_conjuncts(swapped)
    cyc = F.FoStructure(("a", "b"), {"H": {("a", "b"), ("b", "a")}, "V": set()}, {"H": 2, "V": 2})
    assert "SWroot" in F.violated_conjuncts(cyc)


def test_tiling_examples():
    grid = F.gen_grid(1, 1)
    plain = F.TileSet((("a", "a", "a", "a"),))
    assert F.tile_bruteforce(grid, plain) is not None
    assert F.tile_bruteforce(grid, plain, "a") is not None
    split = F.TileSet((("a", "a", "b", "b"),))
    assert F.tile_bruteforce(grid, split) is None
    phi = F.FAnd(F.gen_phi_tiling(plain), F.gen_phi_border(plain, "a"))
    b = F.find_expansion(grid, F.tile_relations(plain), phi)
    assert b is not None and b.relations["P0"] == {(e,) for e in grid.universe}
    assert F.find_expansion(grid, F.tile_relations(split), F.gen_phi_tiling(split)) is None


def test_tiling_border_needs_palette_color():
    ts = F.TileSet((("a", "a", "a", "a"),))
    with pytest.raises(FormulaError):
        F.gen_phi_border(ts, "z")
    with pytest.raises(FormulaError):
        F.TileSet((("a", "a", "a", "q"),), frozenset({"a"}))


# --- file formats ------------------------------------------------------------------------------

def test_fo_store_load_round_trip():
    rng = random.Random(9)
    for _ in range(30):
        a = random_fo_structure(rng, rng.randint(1, 4))
        a = F.FoStructure(tuple(map(str, a.universe)),
                          {n: {tuple(map(str, t)) for t in ts} for n, ts in a.relations.items()},
                          a.arities)
        assert F.fo_load(F.fo_store(a)) == a
    g = F.gen_grid(2, 2)
    assert F.fo_load(F.fo_store(g)) == g


def test_fo_load_unary_shorthand_and_errors():
    a = F.fo_load("universe: a b\nrel P/1: a (b)\n")
    assert a.relations["P"] == {("a",), ("b",)}
    for bad in ("rel P/1: a\n", "universe: a\nrel P: a\n", "universe: a\nrel E/2: (a)\n",
                "universe: a\nstuff: 1\n"):
        with pytest.raises(FormulaError):
            F.fo_load(bad)


def test_tiles_round_trip_and_errors():
    ts = F.TileSet((("a", "b", "a", "b"), ("b", "b", "a", "a")), frozenset({"a", "b", "c"}))
    assert F.tiles_load(F.tiles_store(ts, "c")) == (ts, "c")
    assert F.tiles_load(F.tiles_store(ts)) == (ts, None)
    with pytest.raises(FormulaError):
        F.tiles_load("tile: a b c\n")
    with pytest.raises(FormulaError):
        F.tiles_load("tile: a a a a\nborder: z\n")
