"""Satisfiability for MDL and the fragment complexity classifier.

Satisfiability is always about a single world: formulas are downward closed,
so a satisfying team has a satisfying singleton subteam.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

from . import mc
from .formula import (
    And, Atom, Bot, Box, Cor, Dep, Diamond, Formula, FormulaError, FragmentSignature,
    Impl, NegAtom, NegDep, Or, Top, TOP, BOT, UNBOUNDED, count_classical_or,
    dep_atoms, distribute_classical_or, fold, is_ml, modal_depth, propositions,
    rebuild, signature_of, subformulas,
)
from .kripke import KripkeStructure, ResourceCapError

__all__ = [
    "sat_bounded", "translate_phi_T", "ladner_sat", "ladner_model",
    "monotone_rewrite", "one_modality_simplify", "wedge_free_sat", "classify",
    "sat", "SatConfig", "SatResult", "ComplexityVerdict", "iter_tree_models",
    "PHI_T_OPS",
]

PHI_T_OPS = frozenset({"box", "diamond", "and", "dep-or", "neg", "top", "bot", "dep"})


# --- bounded model search ------------------------------------------------------------

def _tree_to_structure(tree, props: list[str]) -> KripkeStructure:
    worlds, edges, labels = [], [], {}
    stack = [(tree, None)]
    while stack:
        (lab, kids), parent = stack.pop()
        w = f"w{len(worlds)}"
        worlds.append(w)
        labels[w] = {p for j, p in enumerate(props) if (lab >> j) & 1}
        if parent is not None:
            edges.append((parent, w))
        for c in reversed(kids):
            stack.append((c, w))
    return KripkeStructure.build(worlds, edges, labels, props=props)


def _tree_size(tree) -> int:
    return 1 + sum(_tree_size(c) for c in tree[1])


def iter_tree_models(nprops: int, depth: int, branching: int, max_worlds: int) -> Iterator[tuple]:
    """Rooted trees as nested ``(label_bits, children)`` tuples, smallest first.

    Depth is at most ``depth``, every node has at most ``branching`` children,
    and siblings are pairwise distinct (bisimilar siblings are redundant).
    """
    nlabels = 1 << nprops

    @lru_cache(maxsize=None)
    def exact(d: int, n: int) -> tuple:
        if n == 1:
            return tuple((lab, ()) for lab in range(nlabels))
        if d == 0 or branching == 0:
            return ()
        pool = [t for m in range(1, n) for t in exact(d - 1, m)]
        sizes = [_tree_size(t) for t in pool]
        out = []

        def choose(start, budget, slots, acc):
            if budget == 0:
                yield tuple(acc)
                return
            if slots == 0:
                return
            for i in range(start, len(pool)):
                if sizes[i] <= budget:
                    acc.append(pool[i])
                    yield from choose(i + 1, budget - sizes[i], slots - 1, acc)
                    acc.pop()

        for kids in choose(0, n - 1, branching, []):
            for lab in range(nlabels):
                out.append((lab, kids))
        return tuple(out)

    for n in range(1, max_worlds + 1):
        yield from exact(depth, n)


def sat_bounded(f: Formula, max_worlds: int, shape: str = "tree",
                cfg: mc.EvalConfig = mc.DEFAULT) -> Optional[tuple[KripkeStructure, str]]:
    """Search for a world ``w`` of a structure with at most ``max_worlds`` worlds
    such that ``K, {w}`` satisfies ``f``.

    ``shape="tree"`` (default) searches trees of depth at most the modal depth
    of ``f``; siblings are pairwise distinct and, for formulas without
    implication, a node has at most as many children as ``f`` has diamonds.
    ``shape="general"`` enumerates every structure on 1..max_worlds worlds.
    Returns ``(structure, world)`` or None when nothing exists within the bound.
    """
    if max_worlds < 1:
        raise ValueError("max_worlds must be at least 1")
    props = sorted(propositions(f))
    if shape == "general":
        return _sat_general(f, props, max_worlds, cfg)
    if shape != "tree":
        raise ValueError(f"unknown shape {shape!r}")
    has_impl = any(isinstance(g, Impl) for g in subformulas(f))
    ndia = sum(1 for g in subformulas(f) if isinstance(g, Diamond))
    branching = max_worlds if has_impl else ndia
    for tree in iter_tree_models(len(props), modal_depth(f), branching, max_worlds):
        k = _tree_to_structure(tree, props)
        if mc.eval(k, ["w0"], f, cfg):
            return k, "w0"
    return None


def _sat_general(f, props, max_worlds, cfg):
    for n in range(1, max_worlds + 1):
        worlds = [f"w{i}" for i in range(n)]
        pairs = [(a, b) for a in worlds for b in worlds]
        for labs in itertools.product(range(1 << len(props)), repeat=n):
            labels = {w: {p for j, p in enumerate(props) if (lab >> j) & 1}
                      for w, lab in zip(worlds, labs)}
            for emask in range(1 << len(pairs)):
                edges = [e for i, e in enumerate(pairs) if (emask >> i) & 1]
                k = KripkeStructure.build(worlds, edges, labels, props=props)
                for w in worlds:
                    if mc.eval(k, [w], f, cfg):
                        return k, w
    return None


# --- dep elimination -------------------------------------------------------------------

def translate_phi_T(f: Formula, arity_k: int | None = None) -> Iterator[Formula]:
    """Disjuncts of the dep-free translation: one per choice of a Boolean
    function for every dep atom occurrence.

    Each disjunct is plain modal logic; ``f`` is satisfiable iff some disjunct is.
    """
    sig = signature_of(f)
    if not sig.within(PHI_T_OPS):
        raise mc.SignatureError(f"translation accepts {sorted(PHI_T_OPS)}, found {sorted(sig.operators)}")
    atoms = dep_atoms(f)
    if arity_k is not None and any(a.arity > arity_k for a in atoms):
        raise mc.SignatureError(f"dep atom of arity above {arity_k}")
    for combo in mc._function_choices(atoms):
        yield mc._replace_deps(f, combo)


# --- Ladner search -------------------------------------------------------------

class _Ladner:
    def __init__(self):
        self.memo: dict[frozenset, Optional[tuple]] = {}

    def world(self, todo: frozenset) -> Optional[tuple]:
        """A tree model ``(true_atoms, children)`` of the conjunction ``todo``."""
        if todo in self.memo:
            return self.memo[todo]
        self.memo[todo] = None          # guards against cycles (none arise: depth drops)
        r = self._expand(sorted(todo, key=repr), frozenset(), frozenset(), frozenset())
        self.memo[todo] = r
        return r

    def _expand(self, todo: list, lits: frozenset, A: frozenset, E: frozenset):
        while todo:
            g = todo.pop()
            if isinstance(g, Top):
                continue
            if isinstance(g, Bot):
                return None
            if isinstance(g, Atom):
                if NegAtom(g.name) in lits:
                    return None
                lits = lits | {g}
            elif isinstance(g, NegAtom):
                if Atom(g.name) in lits:
                    return None
                lits = lits | {g}
            elif isinstance(g, And):
                todo += [g.left, g.right]
            elif isinstance(g, Or):
                # existential guess, explored with backtracking
                for side in (g.left, g.right):
                    r = self._expand(todo + [side], lits, A, E)
                    if r is not None:
                        return r
                return None
            elif isinstance(g, Box):
                A = A | {g.sub}
            elif isinstance(g, Diamond):
                E = E | {g.sub}
            else:
                raise FormulaError(f"Ladner search takes plain modal formulas, found {type(g).__name__}")
        kids = []
        for psi in sorted(E, key=repr):     # universal: every diamond obligation
            child = self.world(frozenset(A | {psi}))
            if child is None:
                return None
            kids.append(child)
        atoms = frozenset(x.name for x in lits if isinstance(x, Atom))
        return (atoms, tuple(kids))


def _check_ml(f: Formula):
    if not is_ml(f):
        raise FormulaError("expected a plain modal formula (no dep atoms, classical or, implication)")


def ladner_sat(f: Formula) -> bool:
    """Satisfiability of a plain modal formula over all Kripke structures."""
    _check_ml(f)
    return _Ladner().world(frozenset([f])) is not None


def ladner_model(f: Formula, props=None) -> Optional[tuple[KripkeStructure, str]]:
    """Like :func:`ladner_sat` but returns a tree model and its root."""
    _check_ml(f)
    tree = _Ladner().world(frozenset([f]))
    if tree is None:
        return None
    props = sorted(set(props or ()) | propositions(f))
    worlds, edges, labels = [], [], {}
    stack = [(tree, None)]
    while stack:
        (atoms, kids), parent = stack.pop()
        w = f"w{len(worlds)}"
        worlds.append(w)
        labels[w] = set(atoms)
        if parent is not None:
            edges.append((parent, w))
        stack.extend((c, w) for c in kids)
    return KripkeStructure.build(worlds, edges, labels, props=props), "w0"


# --- rewrites --------------------------------------------------------------------

def monotone_rewrite(f: Formula, fresh: str = "t") -> Formula:
    """Replace every atom and dep atom by one fresh atom (negation-free input only)."""
    if any(isinstance(g, (NegAtom, NegDep)) for g in subformulas(f)):
        raise FormulaError("monotone_rewrite needs a formula without negation")
    t = Atom(fresh)

    def step(node, kids):
        if isinstance(node, (Atom, Dep)):
            return t
        return rebuild(node, kids)
    return fold(f, step)


def one_modality_simplify(f: Formula) -> Formula:
    """With only one kind of modality: !dep -> false, dep -> true, classical or -> or."""
    ops = signature_of(f).operators
    if {"box", "diamond"} <= ops:
        raise FormulaError("formula uses both modalities")
    if "impl" in ops:
        raise FormulaError("implication is not supported here")

    def step(node, kids):
        if isinstance(node, NegDep):
            return BOT
        if isinstance(node, Dep):
            return TOP
        if isinstance(node, Cor):
            return Or(*kids)
        return rebuild(node, kids)
    return fold(f, step)


def wedge_free_sat(f: Formula) -> bool:
    """Polynomial decision for formulas without conjunction."""
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Or, Cor)):
            stack += [g.left, g.right]
        elif isinstance(g, (Box, Atom, NegAtom, Top, Dep)):
            return True
        elif isinstance(g, Diamond):
            stack.append(g.sub)          # satisfiable iff the body is
        elif isinstance(g, (Bot, NegDep)):
            continue
        elif isinstance(g, And):
            raise FormulaError("wedge_free_sat needs a formula without conjunction")
        else:
            raise FormulaError(f"unsupported connective {type(g).__name__}")
    return False


# --- pipeline ---------------------------------------------------------------------

@dataclass(frozen=True)
class SatConfig:
    max_worlds: int = 6
    # phi^T is used while (#functions)^(#dep atoms) stays below this
    phi_t_limit: int = 4096
    cor_limit: int = 12
    eval: mc.EvalConfig = mc.DEFAULT


@dataclass
class SatResult:
    verdict: str                       # "sat", "unsat" or "unknown-above-bound"
    method: str
    witness: Optional[tuple[KripkeStructure, str]] = None

    def __bool__(self) -> bool:
        return self.verdict == "sat"


def _ml_branches(f: Formula, limit: int):
    """Classical-or free versions of ``f`` (all of them), or None if too many."""
    n = count_classical_or(f)
    if n > limit:
        return None
    return (distribute_classical_or(f, i) for i in range(1 << n))


def _confirmed(f: Formula, model) -> Optional[tuple]:
    if model is None:
        return None
    k, w = model
    try:
        return model if mc.eval(k, [w], f) else None
    except (ResourceCapError, mc.UnknownPropositionError):
        return None


def sat(f: Formula, cfg: SatConfig = SatConfig()) -> SatResult:
    """Decide satisfiability where a complete method applies, else search."""
    sig = signature_of(f)
    ops = sig.operators
    props = propositions(f)
    if "impl" not in ops:
        if "neg" not in ops and "bot" not in ops:
            # monotone and without false: true everywhere in a reflexive singleton
            k = KripkeStructure.build(["w0"], [("w0", "w0")], {"w0": props}, props=props)
            return SatResult("sat", "monotone", _confirmed(f, (k, "w0")))
        if "and" not in ops:
            ok = wedge_free_sat(f)
            return SatResult("sat" if ok else "unsat", "wedge_free",
                             _confirmed(f, sat_bounded(f, cfg.max_worlds)) if ok else None)
        branches = _ml_branches(f, cfg.cor_limit)
        atoms = dep_atoms(f)
        work = 1
        for a in atoms:
            work *= 1 << (1 << a.arity)
        if branches is not None and work <= cfg.phi_t_limit:
            for g in branches:
                for h in translate_phi_T(g):
                    model = ladner_model(h, props)
                    if model is not None:
                        return SatResult("sat", "phi_T+ladner", _confirmed(f, model))
            return SatResult("unsat", "phi_T+ladner")
        if not ({"box", "diamond"} <= ops):
            ok = ladner_sat(one_modality_simplify(f))
            if not ok:
                return SatResult("unsat", "one_modality")
            return SatResult("sat", "one_modality", _confirmed(f, sat_bounded(f, cfg.max_worlds)))
    found = sat_bounded(f, cfg.max_worlds, cfg=cfg.eval)
    if found is not None:
        return SatResult("sat", "bounded_search", found)
    return SatResult("unknown-above-bound", "bounded_search")


# --- classification ----------------------------------------------------------------

@dataclass(frozen=True)
class ComplexityVerdict:
    class_name: str          # Trivial, P, NP, coNP, Sigma2P, Sigma3P, PSPACE, NEXP, Unclassified
    completeness: bool
    citation: str

    def __post_init__(self):
        if self.completeness and self.class_name in ("P", "Trivial", "Unclassified"):
            raise ValueError("completeness is only claimed for classes above P")

    def __str__(self) -> str:
        if self.class_name == "Unclassified":
            head = "Unclassified"
        elif self.completeness:
            head = f"{self.class_name}-complete"
        elif self.class_name == "Trivial":
            head = "Trivial"
        else:
            head = f"in {self.class_name}"
        return f"{head} ({self.citation.split(',')[0]})"


SAT_COLUMNS = ("box", "diamond", "and", "dep-or", "neg", "top", "bot", "dep", "classical-or")
MC_COLUMNS = ("box", "diamond", "and", "dep-or", "neg", "dep", "classical-or")
MIDL_COLUMNS = ("box", "diamond", "and", "dep-or", "classical-or", "neg", "impl", "dep")

# pattern, class, complete, note
_SAT_TAIL = [
    ("+-+++****", "NP", True, "one modality a"),
    ("-++++****", "NP", True, "one modality a"),
    ("+-+-+***+", "NP", True, "one modality a"),
    ("-++-+***+", "NP", True, "one modality a"),
    ("+-+-+***-", "P", False, "one modality b"),
    ("-++-+***-", "P", False, "one modality b"),
    ("+-+*-****", "P", False, "one modality c"),
    ("-++*-****", "P", False, "one modality c"),
    ("**-******", "P", False, "no conjunction"),
    ("****-*-**", "Trivial", False, "no negation, no false"),
    ("--+++****", "NP", True, "propositional"),
    ("--+*+***+", "NP", True, "propositional, classical or as or"),
    ("--*-****-", "P", False, "propositional without or"),
    ("--**-****", "P", False, "propositional without negation"),
]
SAT_TABLE = [
    ("+++*+**+*", "NEXP", True, "dep with both modalities"),
    ("+++++**-*", "PSPACE", True, "modal logic"),
    ("++++-*+**", "PSPACE", True, "modal logic with false"),
    ("+++-+**-+", "Sigma2P", True, "classical or"),
    ("+++--*+*+", "Sigma2P", True, "classical or with false"),
    ("+++-+**--", "coNP", True, "conjunctive modal logic"),
    ("+++--*+*-", "coNP", True, "conjunctive modal logic with false"),
] + _SAT_TAIL
SAT_TABLE_BOUNDED = [
    ("+++++****", "PSPACE", True, "bounded dep"),
    ("++++-*+**", "PSPACE", True, "modal logic with false"),
    ("+++-+**+*", "Sigma3P", True, "bounded dep without or"),
    ("+++-+**-+", "Sigma2P", True, "classical or"),
    ("+++--*+*+", "Sigma2P", True, "classical or with false"),
    ("+++-+**--", "coNP", True, "conjunctive modal logic"),
    ("+++--*+*-", "coNP", True, "conjunctive modal logic with false"),
] + _SAT_TAIL

MC_TABLE = [
    ("**++*+*", "NP", True, "and with or"),
    ("+**+*+*", "NP", True, "box with or"),
    ("***+**+", "NP", True, "or with classical or"),
    ("*+***+*", "NP", True, "diamond"),
    ("*++***+", "NP", True, "diamond and classical or"),
    ("---+*+-", "Unclassified", False, "open: in NP, lower bound unknown"),
    ("**--*-*", "P", False, "no and, no or"),
    ("*-*-***", "P", False, "box and"),
    ("*****--", "P", False, "modal logic"),
]
MC_TABLE_BOUNDED = [
    ("**++*+*", "NP", True, "and with or"),
    ("+**+*+*", "NP", True, "box with or"),
    ("***+**+", "NP", True, "or with classical or"),
    ("*++**+*", "NP", True, "diamond and"),
    ("*++***+", "NP", True, "diamond and classical or"),
    ("*+*+*+*", "NP", True, "diamond with or"),
    ("**--***", "P", False, "no and, no or"),
    ("*-*-***", "P", False, "box and"),
    ("---***-", "P", False, "or without classical or"),
    ("*****--", "P", False, "modal logic"),
]
MIDL_TABLE = [
    ("**++**++", "PSPACE", True, "implication with dep"),
    ("**+++*+*", "PSPACE", True, "implication with classical or"),
    ("*++*+*+*", "PSPACE", True, "implication with diamond"),
    ("*-+-+*+*", "coNP", True, "propositional implication"),
    ("****-**-", "P", False, "modal logic with implication"),
]


def _match(pattern: str, columns, ops) -> bool:
    for ch, col in zip(pattern, columns):
        present = col in ops
        if (ch == "+" and not present) or (ch == "-" and present):
            return False
    return True


def _lookup(table, columns, ops, name):
    for i, (pat, cls, complete, note) in enumerate(table, 1):
        if _match(pat, columns, ops):
            return i, cls, complete, note
    return None


def classify(sig: FragmentSignature, problem: str) -> ComplexityVerdict:
    """Complexity of SAT or MC for the fragment given by ``sig``.

    ``sig.arity_bound`` selects the regime: ``UNBOUNDED`` or None uses the
    unbounded tables, an int k the bounded ones.
    """
    problem = problem.upper()
    ops = set(sig.operators)
    k = sig.arity_bound
    bounded = isinstance(k, int)
    if problem == "SAT":
        if "impl" in ops:
            return ComplexityVerdict("Unclassified", False, "no table, satisfiability with implication")
        table, name = (SAT_TABLE_BOUNDED, "Table MDL_k-SAT") if bounded else (SAT_TABLE, "Table MDL-SAT")
        hit = _lookup(table, SAT_COLUMNS, ops, name)
        if hit is None:
            return ComplexityVerdict("Unclassified", False, f"{name}, no row")
        i, cls, complete, note = hit
        if bounded and cls == "Sigma3P" and k <= 2:
            return ComplexityVerdict("Unclassified", False,
                                     f"{name}, row {i}, open: in Sigma3P, lower bound needs arity 3")
        return ComplexityVerdict(cls, complete, f"{name}, row {i} ({note})")
    if problem == "MC":
        ops -= {"top", "bot"}
        if "impl" in ops:
            table, cols, name = MIDL_TABLE, MIDL_COLUMNS, "Table MIDL-MC"
        elif bounded:
            table, cols, name = MC_TABLE_BOUNDED, MC_COLUMNS, "Table MDL_k-MC"
        else:
            table, cols, name = MC_TABLE, MC_COLUMNS, "Table MDL-MC"
        hit = _lookup(table, cols, ops, name)
        if hit is None:
            return ComplexityVerdict("Unclassified", False, f"{name}, no row")
        i, cls, complete, note = hit
        if bounded and k == 0 and note == "diamond with or":
            return ComplexityVerdict("Unclassified", False, f"{name}, row {i}, open for arity 0")
        return ComplexityVerdict(cls, complete, f"{name}, row {i} ({note})")
    raise ValueError(f"problem must be SAT or MC, got {problem!r}")
