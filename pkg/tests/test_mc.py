from __future__ import annotations

import random

import pytest

import corpus
from teamlogic import mc
from teamlogic.formula import Atom, Box, Cor, Dep, parse
from teamlogic.kripke import KripkeStructure, ResourceCapError

ALL_OPS = ("box", "diamond", "and", "dep-or", "classical-or", "neg", "top", "bot", "impl", "dep")


def chain(n: int, props=("p", "q")) -> KripkeStructure:
    worlds = [f"w{i}" for i in range(n)]
    return KripkeStructure.build(worlds, list(zip(worlds, worlds[1:])), props=props)


def test_eval_matches_reference_on_random_instances():
    rng = random.Random(11)
    for _ in range(1500):
        k = corpus.random_structure(rng, rng.randint(1, 4))
        t = [w for w in k.worlds if rng.random() < 0.6]
        f = corpus.random_formula(rng, 3, ALL_OPS)
        assert mc.eval(k, t, f) == corpus.ref_eval(k, t, f), (f, t)


@pytest.mark.parametrize("shortcuts,memoize", [(False, False), (False, True), (True, False)])
def test_eval_configs_agree(shortcuts, memoize):
    cfg = mc.EvalConfig(shortcuts=shortcuts, memoize=memoize)
    rng = random.Random(12)
    for _ in range(300):
        k = corpus.random_structure(rng, rng.randint(1, 4))
        t = [w for w in k.worlds if rng.random() < 0.6]
        f = corpus.random_formula(rng, 3, ALL_OPS)
        assert mc.eval(k, t, f, cfg) == mc.eval(k, t, f)


def test_empty_team_satisfies_everything():
    k = chain(2)
    for text in ("false", "!dep(;p)", "p & !p", "<>p", "[]false"):
        assert mc.eval(k, [], parse(text))


def test_fixture_style_split():
    k = KripkeStructure.build(["a", "b", "c"], labels={"a": {"p"}, "b": {"p", "q"}, "c": {"q"}})
    f = parse("dep(;p) | dep(;q)")
    assert mc.eval(k, ["a", "b", "c"], f)
    assert not mc.eval(k, ["a", "b", "c"], parse("dep(;p) \\/ dep(;q)"))
    assert mc.check(k, ["a", "b", "c"], f) == (True, "vee_bounded")


def test_negated_dep_is_false_on_nonempty_teams():
    k = chain(2)
    assert not mc.eval(k, ["w0"], parse("!dep(;p)"))


def test_dep_holds():
    k = KripkeStructure.build(["a", "b", "c"], labels={"a": {"p", "q"}, "b": {"p", "q"}, "c": {"r"}})
    assert mc.dep_holds(k, ["a", "b", "c"], Dep(("p",), "q"))
    assert not mc.dep_holds(k, ["a", "b", "c"], Dep((), "q"))
    assert mc.dep_holds(k, ["a", "b"], Dep((), "q"))


def test_unknown_proposition():
    k = chain(2, props=("p",))
    with pytest.raises(mc.UnknownPropositionError):
        mc.eval(k, ["w0"], parse("z"))
    with pytest.raises(mc.UnknownPropositionError):
        mc.check(k, ["w0"], parse("[]z"))


def test_declared_but_unused_proposition_is_false():
    k = chain(2, props=("p", "z"))
    assert mc.eval(k, ["w0", "w1"], parse("!z"))


def test_diamond_cap_raises():
    worlds = ["r"] + [f"s{i}" for i in range(8)]
    k = KripkeStructure.build(worlds, [("r", w) for w in worlds[1:]], props=("p",))
    f = parse("<>(p | dep(;p))")
    with pytest.raises(ResourceCapError):
        mc.eval(k, ["r"], f, mc.EvalConfig(diamond_cap=4))
    assert mc.eval(k, ["r"], f)


def test_split_cap_raises():
    worlds = [f"s{i}" for i in range(10)]
    k = KripkeStructure.build(worlds, labels={w: {"p"} for w in worlds[::2]}, props=("p", "q"))
    f = parse("(dep(;p) & dep(;q) & (p \\/ q)) | dep(p;q)")
    with pytest.raises(ResourceCapError):
        mc.eval(k, worlds, f, mc.EvalConfig(split_cap=3, shortcuts=False))


def test_config_validation():
    with pytest.raises(ValueError):
        mc.EvalConfig(split_cap=0)


def test_pointwise_mask():
    k = chain(3)
    k = KripkeStructure.build(k.worlds, k.edge_list(), {"w2": {"p"}}, props=("p", "q"))
    m = mc.pointwise(k, parse("[]p"))
    assert [w for i, w in enumerate(k.worlds) if (m >> i) & 1] == ["w1", "w2"]


# --- fast paths ----------------------------------------------------------------------

FAST = [
    (mc.eval_poormans, mc.POORMANS_OPS),
    (mc.eval_vee_bounded, mc.VEE_BOUNDED_OPS),
    (mc.eval_nor_unary, mc.NOR_UNARY_OPS),
    (mc.eval_few_deps, frozenset(ALL_OPS) - {"impl"}),
]


@pytest.mark.parametrize("fn,ops", FAST, ids=lambda x: getattr(x, "__name__", ""))
def test_fast_paths_match_eval(fn, ops):
    rng = random.Random(len(ops))
    checked = 0
    for _ in range(600):
        k = corpus.random_structure(rng, rng.randint(1, 6))
        t = [w for w in k.worlds if rng.random() < 0.6]
        f = corpus.random_formula(rng, 3, ops, max_arity=1)
        try:
            got = fn(k, t, f)
        except mc.FewDepsRefused:
            continue
        assert got == corpus.ref_eval(k, t, f), f
        checked += 1
    assert checked > 200


@pytest.mark.parametrize("fn,bad", [
    (mc.eval_poormans, "<>p"),
    (mc.eval_vee_bounded, "p & q"),
    (mc.eval_nor_unary, "p | q"),
    (mc.eval_few_deps, "p -> q"),
])
def test_fast_paths_reject_foreign_operators(fn, bad):
    with pytest.raises(mc.SignatureError):
        fn(chain(4), ["w0"], parse(bad))


def test_few_deps_refuses_too_many_atoms():
    k = chain(2)
    with pytest.raises(mc.FewDepsRefused):
        mc.eval_few_deps(k, ["w0"], parse("<>(dep(;p) & dep(;q))"))


def test_arity_bound_enforced():
    k = chain(4)
    with pytest.raises(mc.SignatureError):
        mc.eval_vee_bounded(k, ["w0"], parse("dep(p,q;p) | q"), arity_k=1)
    with pytest.raises(mc.SignatureError):
        mc.eval_few_deps(k, ["w0"], parse("<>dep(p,q;p)"), arity_k=1)


def test_vee_bounded_many_deps_is_true():
    # three dep atoms on four worlds: each absorbs half of the rest
    k = KripkeStructure.build(["a", "b", "c", "d"],
                              labels={"a": {"p"}, "b": {"q"}, "c": {"p", "q"}}, props=("p", "q"))
    f = parse("dep(;p) | dep(;q) | dep(;p)")
    assert mc.eval_vee_bounded(k, k.worlds, f)
    assert mc.eval(k, k.worlds, f)


def test_dep_function_formula():
    f = mc.dep_function_formula(Dep(("p",), "q"), (True, False))
    k = KripkeStructure.build(["a", "b"], labels={"a": {"q"}, "b": {"p"}})
    assert mc.eval(k, ["a", "b"], f)
    assert not mc.eval(k, ["a"], mc.dep_function_formula(Dep(("p",), "q"), (False, False)))


def test_poormans_deep_formula_linear():
    k = chain(300)
    f = Atom("p")
    for _ in range(250):
        f = Box(Cor(f, Dep((), "q")))
    assert mc.eval_poormans(k, ["w0"], f)


@pytest.mark.parametrize("text,strategy", [
    ("[](p \\/ dep(;q))", "poormans"),
    ("dep(;p) | !q", "vee_bounded"),
    ("<>(p \\/ dep(;q))", "nor_unary"),
    ("<>(p | dep(;q))", "few_deps"),
    ("p -> q", "eval"),
    ("<>(p | dep(p,q,r;p))", "eval"),
])
def test_dispatcher_strategy(text, strategy):
    k = chain(8, props=("p", "q", "r"))
    f = parse(text)
    verdict, used = mc.check(k, ["w0", "w3"], f)
    assert used == strategy
    assert verdict == mc.eval(k, ["w0", "w3"], f)
