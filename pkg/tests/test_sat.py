from __future__ import annotations

import random

import pytest

import corpus
from teamlogic import mc, sat
from teamlogic.formula import (
    UNBOUNDED, Box, Dep, Diamond, FormulaError, FragmentSignature, dep_atoms, is_ml, parse,
    signature_of, size,
)
from teamlogic.sat import ComplexityVerdict, classify


def test_iter_tree_models_counts():
    # one proposition: 2 single-node trees, then a root with one child of either label
    trees = list(sat.iter_tree_models(1, 1, 1, 2))
    assert len(trees) == 2 + 4
    assert all(len(kids) <= 1 for _, kids in trees)
    # distinct siblings only
    for _, kids in sat.iter_tree_models(1, 1, 3, 4):
        assert len(set(kids)) == len(kids)


def test_sat_bounded_finds_witness():
    f = parse("<>p & <>!p & []dep(;q)")
    k, w = sat.sat_bounded(f, 3)
    assert mc.eval(k, [w], f)
    assert sat.sat_bounded(parse("<>p & []!p"), 4) is None


def test_sat_bounded_general_shape():
    f = parse("p & <>!p & []<>p")
    k, w = sat.sat_bounded(f, 2, shape="general")
    assert mc.eval(k, [w], f)
    with pytest.raises(ValueError):
        sat.sat_bounded(f, 0)
    with pytest.raises(ValueError):
        sat.sat_bounded(f, 2, shape="dag")


def test_ladner_agrees_with_bounded_search():
    # every satisfiable formula of size n has a tree model with at most n worlds
    for f in corpus.ml_formulas(2, 5):
        expected = sat.sat_bounded(f, size(f)) is not None
        assert sat.ladner_sat(f) == expected, f


def test_ladner_model_is_a_model():
    rng = random.Random(5)
    for _ in range(300):
        f = corpus.random_formula(rng, 4, ("box", "diamond", "and", "dep-or", "neg", "top", "bot"))
        m = sat.ladner_model(f)
        assert (m is not None) == sat.ladner_sat(f)
        if m is not None:
            k, w = m
            assert corpus.ref_point(k, w, f)


def test_ladner_rejects_team_operators():
    with pytest.raises(FormulaError):
        sat.ladner_sat(parse("dep(;p)"))


def test_phi_T_disjunct_count_and_soundness():
    f = parse("<>dep(p;q) & []dep(;p)")
    gs = list(sat.translate_phi_T(f))
    assert len(gs) == 4 * 2
    assert all(is_ml(g) for g in gs)
    assert any(sat.ladner_sat(g) for g in gs)
    with pytest.raises(mc.SignatureError):
        list(sat.translate_phi_T(parse("p \\/ q")))
    with pytest.raises(mc.SignatureError):
        list(sat.translate_phi_T(parse("dep(p,q;r)"), arity_k=1))


def test_phi_T_matches_bounded_search_with_deps():
    leaves = [Dep((), "p"), Dep(("p",), "q")]
    checked = 0
    for f in corpus.ml_formulas(2, 4, extra_leaves=leaves):
        if not dep_atoms(f):
            continue
        via_t = any(sat.ladner_sat(g) for g in sat.translate_phi_T(f))
        assert via_t == (sat.sat_bounded(f, 6) is not None), f
        checked += 1
    assert checked > 100


def test_monotone_rewrite():
    assert sat.monotone_rewrite(parse("<>(p | dep(;q)) & []r")) == parse("<>(t | t) & []t")
    with pytest.raises(FormulaError):
        sat.monotone_rewrite(parse("!p"))


def test_one_modality_simplify():
    assert sat.one_modality_simplify(parse("<>(!dep(;p) \\/ dep(p;q))")) == parse("<>(false | true)")
    with pytest.raises(FormulaError):
        sat.one_modality_simplify(parse("<>[]p"))


@pytest.mark.parametrize("text,expected", [
    ("<><>p | []false", True),
    ("<>(false | !dep(;p))", False),
    ("<>false \\/ <>p", True),
    ("false", False),
])
def test_wedge_free_sat(text, expected):
    assert sat.wedge_free_sat(parse(text)) == expected


def test_wedge_free_rejects_and():
    with pytest.raises(FormulaError):
        sat.wedge_free_sat(parse("p & q"))


@pytest.mark.parametrize("text,verdict,method", [
    ("<>(p | dep(;q)) & []p", "sat", "monotone"),
    ("<>!p | []false", "sat", "wedge_free"),
    ("<>false", "unsat", "wedge_free"),
    ("<>p & []!p", "unsat", "phi_T+ladner"),
    ("<>(p & dep(;q)) & <>(!q \\/ q)", "sat", "phi_T+ladner"),
    ("p -> <>q", "sat", "bounded_search"),
])
def test_sat_pipeline(text, verdict, method):
    f = parse(text)
    r = sat.sat(f)
    assert (r.verdict, r.method) == (verdict, method)
    assert bool(r) == (verdict == "sat")
    if r.witness is not None:
        k, w = r.witness
        assert mc.eval(k, [w], f)


def test_sat_pipeline_unknown_above_bound():
    r = sat.sat(parse("(<>p -> false) & <>p"), sat.SatConfig(max_worlds=2))
    assert r.verdict == "unknown-above-bound"


def test_sat_pipeline_agrees_with_bounded_search():
    rng = random.Random(8)
    ops = ("box", "diamond", "and", "dep-or", "neg", "dep", "classical-or")
    for _ in range(150):
        f = corpus.random_formula(rng, 3, ops, max_arity=1)
        r = sat.sat(f)
        assert r.verdict in ("sat", "unsat")
        assert (r.verdict == "sat") == (sat.sat_bounded(f, 5) is not None), f


# --- classification ----------------------------------------------------------------

def sig(ops: str, k=UNBOUNDED):
    return FragmentSignature(frozenset(ops.split()), k)


@pytest.mark.parametrize("ops,k,problem,text", [
    ("box diamond and dep-or neg dep", UNBOUNDED, "sat", "NEXP-complete (Table MDL-SAT)"),
    ("box diamond and dep-or neg", UNBOUNDED, "sat", "PSPACE-complete (Table MDL-SAT)"),
    ("box diamond and dep-or neg dep", 3, "sat", "PSPACE-complete (Table MDL_k-SAT)"),
    ("box diamond and dep-or dep", UNBOUNDED, "sat", "Trivial (Table MDL-SAT)"),
    ("box diamond dep-or neg dep", UNBOUNDED, "sat", "in P (Table MDL-SAT)"),
    ("box diamond and dep-or neg dep", UNBOUNDED, "mc", "NP-complete (Table MDL-MC)"),
    ("box and neg dep classical-or", UNBOUNDED, "mc", "in P (Table MDL-MC)"),
    ("box diamond and dep-or neg dep impl", UNBOUNDED, "mc", "PSPACE-complete (Table MIDL-MC)"),
])
def test_classify_examples(ops, k, problem, text):
    assert str(classify(sig(ops, k), problem)) == text


def test_classify_formula_signature_uses_its_arity():
    f = parse("[](p & <>dep(p,q;r)) | !r")
    s = signature_of(f)
    assert str(classify(s, "sat")) == "PSPACE-complete (Table MDL_k-SAT)"
    assert classify(FragmentSignature(s.operators, UNBOUNDED), "sat").class_name == "NEXP"


def test_classify_unclassified_cases():
    assert classify(sig("box impl"), "sat").class_name == "Unclassified"
    assert classify(sig("dep-or neg dep"), "mc").class_name == "Unclassified"


def test_classify_bad_problem():
    with pytest.raises(ValueError):
        classify(sig("box"), "validity")


def test_verdict_validation():
    with pytest.raises(ValueError):
        ComplexityVerdict("P", True, "x")
    assert str(ComplexityVerdict("NP", False, "Table X, row 1")) == "in NP (Table X)"


def test_every_signature_gets_a_verdict():
    ops = ("box", "diamond", "and", "dep-or", "neg", "top", "bot", "dep", "classical-or")
    for m in range(1 << len(ops)):
        s = FragmentSignature(frozenset(o for i, o in enumerate(ops) if (m >> i) & 1))
        for p in ("sat", "mc"):
            v = classify(s, p)
            assert v.class_name in ("Trivial", "P", "NP", "coNP", "Sigma2P", "Sigma3P",
                                    "PSPACE", "NEXP", "Unclassified")
