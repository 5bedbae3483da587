from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

import corpus
from teamlogic import mc
from teamlogic.formula import (
    BOT, TOP, UNBOUNDED, And, Atom, Box, Cor, Dep, Diamond, FormulaError, FormulaSyntaxError,
    FragmentSignature, Impl, NegAtom, NegDep, Or, count_classical_or, dep_atoms,
    distribute_classical_or, dual, eliminate_const_neg, expand_dep_via_classical_or, is_ml,
    midl_rewrites, modal_depth, parse, propositions, render, signature_of, size, substitute,
)

ALL_OPS = ("box", "diamond", "and", "dep-or", "classical-or", "neg", "top", "bot", "impl", "dep")


@st.composite
def formulas(draw, ops=ALL_OPS, depth=4):
    seed = draw(st.integers(0, 2**32 - 1))
    return corpus.random_formula(random.Random(seed), depth, ops)


# --- parsing and rendering ---------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("p", Atom("p")),
    ("!p", NegAtom("p")),
    ("true", TOP),
    ("false", BOT),
    ("dep(;p)", Dep((), "p")),
    ("dep(p)", Dep((), "p")),
    ("dep(p,q;r)", Dep(("p", "q"), "r")),
    ("!dep(p;q)", NegDep(("p",), "q")),
    ("[]<>p", Box(Diamond(Atom("p")))),
    ("p & q | r", Or(And(Atom("p"), Atom("q")), Atom("r"))),
    ("p | q \\/ r", Cor(Or(Atom("p"), Atom("q")), Atom("r"))),
    ("p -> q -> r", Impl(Atom("p"), Impl(Atom("q"), Atom("r")))),
    ("⊤ ∧ ¬p", And(TOP, NegAtom("p"))),
])
def test_parse_examples(text, expected):
    assert parse(text) == expected


@pytest.mark.parametrize("text", ["", "p &", "(p", "!(p & q)", "p q", "[]", "dep(;)", "p $ q"])
def test_parse_rejects(text):
    with pytest.raises(FormulaSyntaxError):
        parse(text)


def test_syntax_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as e:
        parse("p & (q | ")
    assert "column" in str(e.value) or "offset" in str(e.value)


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_render_parse_round_trip(f):
    assert parse(render(f)) == f


def test_deep_nesting_does_not_recurse():
    f = Atom("p")
    for _ in range(5000):
        f = Box(f)
    assert modal_depth(f) == 5000
    text = render(f)
    assert render(parse(text)) == text


# --- measures and signatures -------------------------------------------------------

def test_measures():
    f = parse("[](p & <>dep(p;q)) \\/ !r")
    assert size(f) == 7
    assert modal_depth(f) == 2
    assert propositions(f) == {"p", "q", "r"}
    assert dep_atoms(f) == [Dep(("p",), "q")]
    assert count_classical_or(f) == 1
    assert not is_ml(f)
    assert is_ml(parse("[]p | <>!q"))


def test_signature_of():
    sig = signature_of(parse("[](p & <>dep(p,q;r)) \\/ !r"))
    assert sig.operators == {"box", "diamond", "and", "dep", "classical-or", "neg"}
    assert sig.arity_bound == 2
    assert signature_of(parse("p")).arity_bound is None
    assert "neg" in signature_of(parse("!dep(;p)"))


def test_signature_validation():
    with pytest.raises(ValueError):
        FragmentSignature(frozenset({"box", "until"}))
    assert FragmentSignature(frozenset({"box"}), UNBOUNDED).within({"box", "and"})


# --- transforms --------------------------------------------------------------------

ML_OPS = ("box", "diamond", "and", "dep-or", "neg", "top", "bot")


@settings(max_examples=200, deadline=None)
@given(formulas(ops=ML_OPS))
def test_dual_is_involution_and_complement(f):
    assert dual(dual(f)) == f
    k = corpus.random_structure(random.Random(size(f)), 3)
    for w in k.worlds:
        assert corpus.ref_point(k, w, dual(f)) != corpus.ref_point(k, w, f)


def test_dual_rejects_dep():
    with pytest.raises(FormulaError):
        dual(parse("dep(;p)"))


def test_substitute():
    f = parse("<>p & [](p | q)")
    assert substitute(f, Atom("p"), NegAtom("r")) == parse("<>!r & [](!r | q)")


def test_expand_dep_shape():
    assert expand_dep_via_classical_or(Dep((), "q")) == parse("q \\/ !q")
    g = expand_dep_via_classical_or(Dep(("p1", "p2"), "q"))
    assert render(g).count("\\/") == 4
    with pytest.raises(FormulaError):
        expand_dep_via_classical_or(NegDep((), "q"))


def test_distribute_classical_or_indices():
    f = parse("(p \\/ q) & <>(r \\/ !p)")
    outs = {render(distribute_classical_or(f, i)) for i in range(4)}
    assert outs == {"p & <>r", "q & <>r", "p & <>!p", "q & <>!p"}
    with pytest.raises(FormulaError):
        distribute_classical_or(f, 4)


@settings(max_examples=150, deadline=None)
@given(formulas(ops=("box", "diamond", "and", "dep-or", "classical-or", "neg", "dep"), depth=3),
       st.integers(0, 10**6))
def test_classical_or_split_soundness(f, seed):
    k = corpus.random_structure(random.Random(seed), 3)
    t = list(k.worlds)
    n = count_classical_or(f)
    expected = mc.eval(k, t, f)
    assert expected == any(mc.eval(k, t, distribute_classical_or(f, i)) for i in range(1 << n))


def test_midl_rewrites_examples():
    assert midl_rewrites(parse("!p"), "neg-as-impl") == parse("p -> false")
    assert midl_rewrites(parse("dep(p,q;r)"), "dep-as-impl") == parse("dep(;p) & dep(;q) -> dep(;r)")
    assert midl_rewrites(parse("p -> q"), "impl-as-dual-or") == parse("!p | q")
    with pytest.raises(FormulaError):
        midl_rewrites(parse("dep(;p) -> q"), "impl-as-dual-or")
    with pytest.raises(FormulaError):
        midl_rewrites(parse("p"), "no-such-rule")


def test_eliminate_const_neg_preserves_truth():
    rng = random.Random(4)
    for _ in range(200):
        k = corpus.random_structure(rng, 3)
        f = corpus.random_formula(rng, 3, ("box", "diamond", "and", "dep-or", "neg", "top", "bot", "dep"))
        t = [w for w in k.worlds if rng.random() < 0.5]
        g, k2 = eliminate_const_neg(f, k)
        kinds = {type(h) for h in __import__("teamlogic").formula.subformulas(g)}
        assert not kinds & {NegAtom, type(TOP), type(BOT)}
        assert mc.eval(k, t, f) == mc.eval(k2, t, g)


def test_eliminate_const_neg_name_clash():
    k = corpus.random_structure(random.Random(0), 2, props=("p", "t"))
    with pytest.raises(FormulaError):
        eliminate_const_neg(parse("!p"), k)
