"""Model checking under team semantics.

:func:`eval` is the exhaustive evaluator for MIDL (and so for MDL and plain
modal logic).  The ``eval_*`` functions are the polynomial special cases, and
:func:`check` dispatches to the cheapest one whose signature fits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .formula import (
    And, Atom, Bot, Box, Cor, Dep, Diamond, Formula, FormulaError, Impl, NegAtom,
    NegDep, Or, Top, BOT, big_or, big_and, children, dep_atoms, fold, is_ml,
    propositions, rebuild, signature_of, subformulas,
)
from .kripke import (
    KripkeStructure, ResourceCapError, bits, diamond_cover_masks, popcount,
)

__all__ = [
    "EvalConfig", "eval", "dep_holds", "eval_poormans", "eval_few_deps",
    "eval_vee_bounded", "eval_nor_unary", "check", "pointwise",
    "SignatureError", "FewDepsRefused", "UnknownPropositionError",
    "POORMANS_OPS", "VEE_BOUNDED_OPS", "NOR_UNARY_OPS", "dep_function_formula",
]

POORMANS_OPS = frozenset({"box", "and", "classical-or", "neg", "dep", "top", "bot"})
VEE_BOUNDED_OPS = frozenset({"dep-or", "neg", "dep", "top", "bot"})
NOR_UNARY_OPS = frozenset({"box", "diamond", "classical-or", "neg", "dep", "top", "bot"})
# the dispatcher only picks eval_few_deps below this many function choices
FEW_DEPS_WORK = 64


class SignatureError(FormulaError):
    """The formula uses operators outside a fast path's fragment."""


class FewDepsRefused(FormulaError):
    """More positive dep atoms than log2 of the number of worlds."""


class UnknownPropositionError(KeyError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    memoize: bool = True
    split_cap: int = 20
    diamond_cap: int = 24
    # flat subformulas evaluated pointwise; off = the literal team algorithm
    shortcuts: bool = True

    def __post_init__(self):
        if self.split_cap <= 0 or self.diamond_cap <= 0:
            raise ValueError("caps must be positive")


DEFAULT = EvalConfig()


def _check_props(k: KripkeStructure, f: Formula):
    missing = propositions(f) - k.props
    if missing:
        raise UnknownPropositionError(f"propositions not declared in the structure: {sorted(missing)}")


def pointwise(k: KripkeStructure, f: Formula, _memo: dict | None = None) -> int:
    """Worlds satisfying a plain modal formula, as a bitmask (standard semantics)."""
    full = k.all_mask
    memo = {} if _memo is None else _memo

    def step(node, kids):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Top):
            r = full
        elif isinstance(node, Bot):
            r = 0
        elif isinstance(node, Atom):
            r = k.prop_mask.get(node.name, 0)
        elif isinstance(node, NegAtom):
            r = full & ~k.prop_mask.get(node.name, 0)
        elif isinstance(node, And):
            r = kids[0] & kids[1]
        elif isinstance(node, Or):
            r = kids[0] | kids[1]
        elif isinstance(node, Box):
            r = 0
            for i in range(k.n):
                if k.succ[i] & ~kids[0] == 0:
                    r |= 1 << i
        elif isinstance(node, Diamond):
            r = 0
            for i in range(k.n):
                if k.succ[i] & kids[0]:
                    r |= 1 << i
        else:
            raise FormulaError(f"pointwise evaluation needs a plain modal formula, found {type(node).__name__}")
        memo[key] = r
        return r
    return fold(f, step)


def dep_holds_mask(k: KripkeStructure, mask: int, d) -> bool:
    seen: dict[tuple, bool] = {}
    pm = k.prop_mask
    dets = [pm.get(p, 0) for p in d.determinants]
    qm = pm.get(d.determined, 0)
    for i in bits(mask):
        b = 1 << i
        key = tuple(bool(m & b) for m in dets)
        v = bool(qm & b)
        if seen.setdefault(key, v) != v:
            return False
    return True


def dep_holds(k: KripkeStructure, t, atom) -> bool:
    """Worlds of ``t`` agreeing on the determinants agree on the determined proposition."""
    if not isinstance(atom, Dep):
        raise FormulaError("dep_holds expects a positive dep atom")
    _check_props(k, atom)
    return dep_holds_mask(k, k.as_mask(t), atom)


def _flat_ids(f: Formula) -> set[int]:
    """ids of subformulas that are plain modal (hence flat)."""
    out: set[int] = set()

    def step(node, kids):
        ok = all(kids) and not isinstance(node, (Dep, NegDep, Cor, Impl))
        if ok:
            out.add(id(node))
        return ok
    fold(f, step)
    return out


class _Evaluator:
    def __init__(self, k: KripkeStructure, f: Formula, cfg: EvalConfig):
        self.k = k
        self.cfg = cfg
        self.memo: dict | None = {} if cfg.memoize else None
        self.flat = _flat_ids(f) if cfg.shortcuts else set()
        self.pw_memo: dict = {}

    def ev(self, f: Formula, T: int) -> bool:
        if T == 0:
            return True
        if self.memo is not None:
            key = (id(f), T)
            r = self.memo.get(key)
            if r is None:
                r = self._ev(f, T)
                self.memo[key] = r
            return r
        return self._ev(f, T)

    def _sat_set(self, f: Formula) -> int:
        return pointwise(self.k, f, self.pw_memo)

    def _ev(self, f: Formula, T: int) -> bool:
        k = self.k
        if id(f) in self.flat and not isinstance(f, (Atom, NegAtom, Top, Bot)):
            return T & ~self._sat_set(f) == 0
        if isinstance(f, Top):
            return True
        if isinstance(f, Bot):
            return False
        if isinstance(f, Atom):
            return T & ~k.prop_mask.get(f.name, 0) == 0
        if isinstance(f, NegAtom):
            return T & k.prop_mask.get(f.name, 0) == 0
        if isinstance(f, Dep):
            return dep_holds_mask(k, T, f)
        if isinstance(f, NegDep):
            return False
        if isinstance(f, And):
            return self.ev(f.left, T) and self.ev(f.right, T)
        if isinstance(f, Cor):
            return self.ev(f.left, T) or self.ev(f.right, T)
        if isinstance(f, Box):
            return self.ev(f.sub, k.image_mask(T))
        if isinstance(f, Diamond):
            return self._diamond(f.sub, T)
        if isinstance(f, Or):
            return self._split(f, T)
        if isinstance(f, Impl):
            return self._impl(f, T)
        raise FormulaError(f"unknown node {f!r}")

    def _cap(self, T: int):
        if popcount(T) > self.cfg.split_cap:
            raise ResourceCapError(f"team of size {popcount(T)} exceeds split_cap {self.cfg.split_cap}")

    def _split(self, f: Or, T: int) -> bool:
        l, r = f.left, f.right
        # A flat side takes its largest possible share; downward closure does the rest.
        if id(l) in self.flat:
            Y = T & self._sat_set(l)
            return self.ev(r, T & ~Y)
        if id(r) in self.flat:
            Z = T & self._sat_set(r)
            return self.ev(l, T & ~Z)
        self._cap(T)
        Y = T
        while True:
            if self.ev(l, Y) and self.ev(r, T & ~Y):
                return True
            if Y == 0:
                return False
            Y = (Y - 1) & T

    def _impl(self, f: Impl, T: int) -> bool:
        l, r = f.left, f.right
        if id(l) in self.flat:
            # every subteam satisfying a flat antecedent lies inside its largest one
            return self.ev(r, T & self._sat_set(l))
        self._cap(T)
        Y = T
        while True:
            if self.ev(l, Y) and not self.ev(r, Y):
                return False
            if Y == 0:
                return True
            Y = (Y - 1) & T

    def _diamond(self, sub: Formula, T: int) -> bool:
        k = self.k
        if T & k.dead_mask():
            return False
        if id(sub) in self.flat:
            good = k.image_mask(T) & self._sat_set(sub)
            return all(k.succ[s] & good for s in bits(T))
        for cand in diamond_cover_masks(k, T, True, self.cfg.diamond_cap):
            if self.ev(sub, cand):
                return True
        return False


def eval(k: KripkeStructure, t, f: Formula, cfg: EvalConfig = DEFAULT) -> bool:  # noqa: A001
    """Team semantics truth of ``f`` on team ``t``."""
    _check_props(k, f)
    return _Evaluator(k, f, cfg).ev(f, k.as_mask(t))


# --- fast paths ----------------------------------------------------------------

def _require(f: Formula, allowed: frozenset, name: str):
    sig = signature_of(f)
    if not sig.within(allowed):
        raise SignatureError(f"{name} does not accept {sorted(sig.operators - allowed)}")
    return sig


def eval_poormans(k: KripkeStructure, t, f: Formula) -> bool:
    """Deterministic check for box, and, classical or, literals and dep atoms.

    Without diamond and splitting or, the team at a node only depends on its
    box depth, so every node is visited once on R^d(T).
    """
    _require(f, POORMANS_OPS, "eval_poormans")
    _check_props(k, f)
    teams = [k.as_mask(t)]
    # explicit stack of (node, depth); results combined afterwards
    def team_at(d):
        while len(teams) <= d:
            teams.append(k.image_mask(teams[-1]))
        return teams[d]

    def go(g, d):
        while True:
            T = team_at(d)
            if T == 0:
                return True
            if isinstance(g, Box):
                g, d = g.sub, d + 1
                continue
            if isinstance(g, And):
                return go(g.left, d) and go(g.right, d)
            if isinstance(g, Cor):
                return go(g.left, d) or go(g.right, d)
            if isinstance(g, Top):
                return True
            if isinstance(g, (Bot, NegDep)):
                return False
            if isinstance(g, Atom):
                return T & ~k.prop_mask.get(g.name, 0) == 0
            if isinstance(g, NegAtom):
                return T & k.prop_mask.get(g.name, 0) == 0
            if isinstance(g, Dep):
                return dep_holds_mask(k, T, g)
            raise SignatureError(type(g).__name__)
    return go(f, 0)


def dep_function_formula(d: Dep, table: tuple[bool, ...]) -> Formula:
    """Flat encoding of "f(determinants) <-> determined" for a truth table of f.

    ``table[i]`` is f on the valuation whose bit j (of i) is the value of the
    j-th determinant.  The result is the full DNF: one disjunct per valuation.
    """
    q = d.determined
    out = []
    for i, val in enumerate(table):
        lits = [Atom(p) if (i >> j) & 1 else NegAtom(p) for j, p in enumerate(d.determinants)]
        lits.append(Atom(q) if val else NegAtom(q))
        out.append(big_and(lits))
    return big_or(out)


def _replace_deps(f: Formula, encodings) -> Formula:
    """Swap dep atom occurrences (in left-to-right order) for ``encodings``."""
    it = iter(encodings)

    def step(node, kids):
        if isinstance(node, Dep):
            return next(it)
        if isinstance(node, NegDep):
            return BOT
        return rebuild(node, kids)
    return fold(f, step)


def _function_choices(atoms: list) -> itertools.product:
    per_atom = []
    for a in atoms:
        tables = itertools.product((False, True), repeat=1 << a.arity)
        per_atom.append([dep_function_formula(a, tb) for tb in tables])
    return itertools.product(*per_atom)


def _few_deps_unchecked(k: KripkeStructure, T: int, f: Formula, cfg: EvalConfig = DEFAULT) -> bool:
    if T == 0:
        return True
    atoms = dep_atoms(f)
    for combo in _function_choices(atoms):
        g = _replace_deps(f, combo)
        if is_ml(g):
            if T & ~pointwise(k, g) == 0:
                return True
        elif _Evaluator(k, g, cfg).ev(g, T):
            return True
    return False


def eval_few_deps(k: KripkeStructure, t, f: Formula, arity_k: int | None = None,
                  cfg: EvalConfig = DEFAULT) -> bool:
    """Guess a Boolean function per dep atom and check the resulting flat formula."""
    if any(isinstance(g, Impl) for g in subformulas(f)):
        raise SignatureError("eval_few_deps handles MDL formulas only")
    _check_props(k, f)
    atoms = dep_atoms(f)
    if arity_k is not None and any(a.arity > arity_k for a in atoms):
        raise SignatureError(f"dep atom of arity above {arity_k}")
    if atoms and (k.n == 0 or len(atoms) > math.log2(k.n)):
        raise FewDepsRefused(f"{len(atoms)} dep atoms on {k.n} worlds")
    return _few_deps_unchecked(k, k.as_mask(t), f, cfg)


def eval_vee_bounded(k: KripkeStructure, t, f: Formula, arity_k: int | None = None) -> bool:
    """Splitting disjunctions of literals and dep atoms.

    With more positive dep atoms than log2|S| the formula is true on every
    team: each atom can absorb at least half of what remains.
    """
    _require(f, VEE_BOUNDED_OPS, "eval_vee_bounded")
    _check_props(k, f)
    atoms = dep_atoms(f)
    if arity_k is not None and any(a.arity > arity_k for a in atoms):
        raise SignatureError(f"dep atom of arity above {arity_k}")
    if atoms and (k.n == 0 or len(atoms) > math.log2(k.n)):
        return True
    return _few_deps_unchecked(k, k.as_mask(t), f)


def _cor_paths(f: Formula) -> list[Formula]:
    """Distribute classical or to the top of a formula without binary and/or."""
    def step(node, kids):
        if isinstance(node, Cor):
            return kids[0] + kids[1]
        if isinstance(node, (Box, Diamond)):
            return [type(node)(g) for g in kids[0]]
        return [node]
    return fold(f, step)


def eval_nor_unary(k: KripkeStructure, t, f: Formula) -> bool:
    """Modalities over classical or: linearly many single-path formulas."""
    _require(f, NOR_UNARY_OPS, "eval_nor_unary")
    _check_props(k, f)
    T = k.as_mask(t)
    return any(_few_deps_unchecked(k, T, g) for g in _cor_paths(f))


def check(k: KripkeStructure, t, f: Formula, cfg: EvalConfig = DEFAULT) -> tuple[bool, str]:
    """Run the cheapest applicable algorithm; returns (verdict, strategy name)."""
    sig = signature_of(f)
    ops = sig.operators
    if ops <= POORMANS_OPS:
        return eval_poormans(k, t, f), "poormans"
    if ops <= VEE_BOUNDED_OPS:
        return eval_vee_bounded(k, t, f), "vee_bounded"
    atoms = dep_atoms(f)
    # each path enumerates 2^(2^arity) functions, so wide atoms go to eval
    if ops <= NOR_UNARY_OPS and all(a.arity <= 2 for a in atoms):
        return eval_nor_unary(k, t, f), "nor_unary"
    if "impl" not in ops:
        work = math.prod(1 << (1 << a.arity) for a in atoms)
        if atoms and len(atoms) <= math.log2(max(k.n, 1)) and work <= FEW_DEPS_WORK:
            return eval_few_deps(k, t, f, cfg=cfg), "few_deps"
    return eval(k, t, f, cfg), "eval"
