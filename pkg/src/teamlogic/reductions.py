"""Hardness constructions as instance generators, with brute-force oracles.

Every ``gen_mc_*`` function maps a source instance to a model checking
instance that evaluates true exactly when the source instance is a yes
instance.  The ``gen_sat_*`` functions produce formulas whose satisfiability
tracks the source problem.  Variable ``x_j`` becomes proposition ``p<j>``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .formula import (
    And, Atom, Bot, Box, Cor, Dep, Diamond, Formula, Impl, NegAtom, Or, Top,
    BOT, big_and, big_cor, big_or, boxes, diamonds, propositions, render,
    subformulas,
)
from .kripke import KripkeStructure, Team, store

__all__ = [
    "ReductionError", "CnfInstance", "QbfInstance", "DqbfInstance", "QcspInstance",
    "ModelCheckInstance", "normalize_clauses", "parse_dimacs", "parse_qdimacs",
    "parse_dqdimacs", "to_dimacs", "to_qdimacs", "to_dqdimacs", "prop_eval",
    "gen_mc_wedge_vee", "gen_mc_diamond", "gen_mc_box_vee", "gen_mc_diamond_wedge",
    "gen_mc_diamond_vee", "gen_mc_vee_nor", "gen_mc_pidl_taut",
    "gen_mc_midl_qbf_sor", "gen_mc_midl_qbf_diamond", "MC_GENERATORS",
    "gen_sat_dqbf", "gen_sat_qbf3", "gen_sat_qcsp", "witness_tree",
    "oracle_sat3", "oracle_qbf", "oracle_dqbf", "oracle_taut", "oracle_qcsp",
    "cnf_matrix", "random_cnf", "random_qbf",
]

Clause = tuple  # of nonzero ints, DIMACS style: j means x_j, -j means not x_j


class ReductionError(ValueError):
    """Malformed source instance or violated generator precondition."""


def _var(j: int) -> str:
    return f"p{j}"


def _check_clauses(num_vars: int, clauses) -> tuple:
    out = []
    for c in clauses:
        c = tuple(int(l) for l in c)
        for l in c:
            if l == 0 or abs(l) > num_vars:
                raise ReductionError(f"literal {l} out of range 1..{num_vars}")
        out.append(c)
    return tuple(out)


def normalize_clauses(clauses) -> tuple:
    """Drop duplicate literals inside clauses and drop tautological clauses."""
    out = []
    for c in clauses:
        c = tuple(dict.fromkeys(c))
        if any(-l in c for l in c):
            continue
        out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class CnfInstance:
    num_vars: int
    clauses: tuple = ()

    def __post_init__(self):
        if self.num_vars < 0:
            raise ReductionError("negative variable count")
        object.__setattr__(self, "clauses", _check_clauses(self.num_vars, self.clauses))

    def is_3cnf(self) -> bool:
        return all(len(c) <= 3 for c in self.clauses)


@dataclass(frozen=True)
class QbfInstance:
    """Prenex QBF.  ``prefix`` is a tuple of ``(quantifier, vars)`` blocks with
    quantifier ``"a"`` or ``"e"``.  ``matrix`` is a clause tuple or a
    propositional formula over ``p1..pn``."""
    num_vars: int
    prefix: tuple
    matrix: Union[tuple, Formula] = ()

    def __post_init__(self):
        blocks = []
        seen = set()
        for q, vs in self.prefix:
            if q not in ("a", "e"):
                raise ReductionError(f"unknown quantifier {q!r}")
            vs = tuple(int(v) for v in vs)
            for v in vs:
                if not 1 <= v <= self.num_vars or v in seen:
                    raise ReductionError(f"bad or repeated quantified variable {v}")
                seen.add(v)
            if vs:
                if blocks and blocks[-1][0] == q:
                    blocks[-1] = (q, blocks[-1][1] + vs)
                else:
                    blocks.append((q, vs))
        object.__setattr__(self, "prefix", tuple(blocks))
        if isinstance(self.matrix, (tuple, list)):
            object.__setattr__(self, "matrix", _check_clauses(self.num_vars, self.matrix))
        else:
            extra = propositions(self.matrix) - {_var(j) for j in range(1, self.num_vars + 1)}
            if extra:
                raise ReductionError(f"matrix mentions unknown variables {sorted(extra)}")

    def order(self) -> list[tuple[str, int]]:
        """Per-variable quantifiers, free variables first as existentials."""
        bound = [(q, v) for q, vs in self.prefix for v in vs]
        used = {v for _, v in bound}
        free = [("e", v) for v in range(1, self.num_vars + 1) if v not in used]
        return free + bound

    def is_alternating(self) -> bool:
        """Prefix is forall x1 exists x2 ... exists xn with n even."""
        order = self.order()
        return (len(order) % 2 == 0 and len(order) >= 2
                and all(v == i + 1 and q == ("a" if i % 2 == 0 else "e")
                        for i, (q, v) in enumerate(order)))

    def pattern(self) -> str:
        return "".join(q for q, _ in _merge(self.order()))


def _merge(order):
    blocks: list[tuple[str, list]] = []
    for q, v in order:
        if blocks and blocks[-1][0] == q:
            blocks[-1][1].append(v)
        else:
            blocks.append((q, [v]))
    return blocks


@dataclass(frozen=True)
class DqbfInstance:
    """Universals ``p1..pk``, existentials ``p(k+1)..pn`` with dependency sets."""
    num_universal: int
    num_vars: int
    deps: tuple            # deps[i] = frozenset of universals for existential k+1+i
    clauses: tuple = ()

    def __post_init__(self):
        k, n = self.num_universal, self.num_vars
        if not 0 <= k <= n:
            raise ReductionError("need 0 <= universals <= variables")
        deps = tuple(frozenset(int(u) for u in d) for d in self.deps)
        if len(deps) != n - k:
            raise ReductionError(f"expected {n - k} dependency sets, got {len(deps)}")
        for d in deps:
            if any(not 1 <= u <= k for u in d):
                raise ReductionError("dependency sets may only mention universals")
        object.__setattr__(self, "deps", deps)
        object.__setattr__(self, "clauses", _check_clauses(n, self.clauses))


@dataclass(frozen=True)
class QcspInstance:
    """1-in-3 QCSP: universals ``p1..pk``, existentials ``p(k+1)..pn``.
    Every clause is a triple of pairwise distinct variables."""
    num_universal: int
    num_vars: int
    clauses: tuple = ()

    def __post_init__(self):
        if not 0 <= self.num_universal <= self.num_vars:
            raise ReductionError("need 0 <= universals <= variables")
        cl = _check_clauses(self.num_vars, self.clauses)
        for c in cl:
            if len(c) != 3 or len(set(c)) != 3 or any(v < 0 for v in c):
                raise ReductionError(f"clause {c} is not three distinct variables")
        object.__setattr__(self, "clauses", cl)


@dataclass(frozen=True)
class ModelCheckInstance:
    structure: KripkeStructure
    team: Team
    formula: Formula

    def store(self) -> str:
        """Structure file text with the formula as a leading comment."""
        return f"# formula: {render(self.formula)}\n" + store(self.structure, self.team)


# --- file formats ------------------------------------------------------------------

def _dimacs_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        yield lineno, line


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(x) for x in line.split()]
    except ValueError:
        raise ReductionError(f"line {lineno}: expected integers") from None


def _parse_body(text: str, extra):
    """Shared DIMACS reader; ``extra(tag, ints, lineno)`` handles prefix lines."""
    header = None
    clauses: list[tuple] = []
    pending: list[int] = []
    for lineno, line in _dimacs_lines(text):
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ReductionError(f"line {lineno}: bad problem line")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ReductionError(f"line {lineno}: data before problem line")
        tag = line.split()[0]
        if tag in ("a", "e", "d"):
            if clauses or pending:
                raise ReductionError(f"line {lineno}: quantifier after clauses")
            nums = _ints(line[1:], lineno)
            if not nums or nums[-1] != 0:
                raise ReductionError(f"line {lineno}: quantifier line must end in 0")
            extra(tag, nums[:-1], lineno)
            continue
        for x in _ints(line, lineno):
            if x == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(x)
    if header is None:
        raise ReductionError("missing problem line")
    if pending:
        clauses.append(tuple(pending))
    n, m = header
    if len(clauses) != m:
        raise ReductionError(f"header announces {m} clauses, found {len(clauses)}")
    return n, clauses


def parse_dimacs(text: str) -> CnfInstance:
    def extra(tag, nums, lineno):
        raise ReductionError(f"line {lineno}: quantifiers are not allowed in cnf input")
    n, clauses = _parse_body(text, extra)
    return CnfInstance(n, tuple(clauses))


def parse_qdimacs(text: str) -> QbfInstance:
    prefix = []

    def extra(tag, nums, lineno):
        if tag == "d":
            raise ReductionError(f"line {lineno}: dependency lines need parse_dqdimacs")
        prefix.append((tag, tuple(nums)))
    n, clauses = _parse_body(text, extra)
    return QbfInstance(n, tuple(prefix), tuple(clauses))


def parse_dqdimacs(text: str) -> DqbfInstance:
    """DQDIMACS: ``a`` universals, ``e`` existentials (depending on all earlier
    universals), ``d v u1 .. uj 0`` explicit dependencies.  Variables are
    renumbered so universals come first, in order of appearance."""
    univ: list[int] = []
    exist: list[tuple[int, frozenset]] = []

    def extra(tag, nums, lineno):
        if tag == "a":
            univ.extend(nums)
        elif tag == "e":
            exist.extend((v, frozenset(univ)) for v in nums)
        else:
            if not nums:
                raise ReductionError(f"line {lineno}: empty dependency line")
            exist.append((nums[0], frozenset(nums[1:])))
    n, clauses = _parse_body(text, extra)
    order = univ + [v for v, _ in exist]
    if len(set(order)) != len(order):
        raise ReductionError("variable quantified twice")
    used = {abs(l) for c in clauses for l in c}
    for v in sorted(used - set(order)):
        exist.append((v, frozenset()))
        order.append(v)
    if any(not 1 <= v <= n for v in order):
        raise ReductionError("variable out of range")
    ren = {v: i + 1 for i, v in enumerate(order)}
    for _, d in exist:
        if not d <= set(univ):
            raise ReductionError("dependency on a non-universal variable")
    deps = tuple(frozenset(ren[u] for u in d) for _, d in exist)
    cl = tuple(tuple((1 if l > 0 else -1) * ren[abs(l)] for l in c) for c in clauses)
    return DqbfInstance(len(univ), len(order), deps, cl)


def _clause_lines(clauses) -> list[str]:
    return [" ".join(map(str, c)) + " 0" for c in clauses]


def to_dimacs(c: CnfInstance) -> str:
    return "\n".join([f"p cnf {c.num_vars} {len(c.clauses)}"] + _clause_lines(c.clauses)) + "\n"


def to_qdimacs(q: QbfInstance) -> str:
    if not isinstance(q.matrix, tuple):
        raise ReductionError("only CNF matrices have a QDIMACS form")
    lines = [f"p cnf {q.num_vars} {len(q.matrix)}"]
    lines += [f"{t} " + " ".join(map(str, vs)) + " 0" for t, vs in q.prefix]
    return "\n".join(lines + _clause_lines(q.matrix)) + "\n"


def to_dqdimacs(d: DqbfInstance) -> str:
    lines = [f"p cnf {d.num_vars} {len(d.clauses)}"]
    if d.num_universal:
        lines.append("a " + " ".join(map(str, range(1, d.num_universal + 1))) + " 0")
    for i, dep in enumerate(d.deps):
        v = d.num_universal + 1 + i
        lines.append(" ".join(["d", str(v)] + [str(u) for u in sorted(dep)] + ["0"]))
    return "\n".join(lines + _clause_lines(d.clauses)) + "\n"


# --- propositional helpers ---------------------------------------------------------

def prop_eval(f: Formula, val) -> bool:
    """Classical truth of a modality-free formula; both disjunctions are classical."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Atom):
        return bool(val[f.name])
    if isinstance(f, NegAtom):
        return not val[f.name]
    if isinstance(f, And):
        return prop_eval(f.left, val) and prop_eval(f.right, val)
    if isinstance(f, (Or, Cor)):
        return prop_eval(f.left, val) or prop_eval(f.right, val)
    raise ReductionError(f"not a propositional NNF formula: {type(f).__name__}")


def _clauses_true(clauses, val: dict) -> bool:
    return all(any(val[abs(l)] == (l > 0) for l in c) for c in clauses)


def cnf_matrix(clauses) -> Formula:
    """A clause list as a propositional formula over ``p1..pn``."""
    return big_and(big_or(Atom(_var(l)) if l > 0 else NegAtom(_var(-l)) for l in c)
                   for c in clauses)


def _check_nnf(f: Formula):
    for g in subformulas(f):
        if not isinstance(g, (Top, Bot, Atom, NegAtom, And, Or, Cor)):
            raise ReductionError(f"not a propositional NNF formula: {type(g).__name__}")


# --- oracles -------------------------------------------------------------------------

def oracle_sat3(c: CnfInstance) -> bool:
    for bitsv in itertools.product((False, True), repeat=c.num_vars):
        val = dict(zip(range(1, c.num_vars + 1), bitsv))
        if _clauses_true(c.clauses, val):
            return True
    return False


def oracle_qbf(q: QbfInstance) -> bool:
    """Game-tree evaluation of the prefix."""
    order = q.order()
    if isinstance(q.matrix, tuple):
        def leaf(val):
            return _clauses_true(q.matrix, val)
    else:
        def leaf(val):
            return prop_eval(q.matrix, {_var(j): v for j, v in val.items()})

    def go(i, val):
        if i == len(order):
            return leaf(val)
        quant, v = order[i]
        results = (go(i + 1, {**val, v: b}) for b in (False, True))
        return any(results) if quant == "e" else all(results)
    return go(0, {})


def oracle_dqbf(d: DqbfInstance) -> bool:
    """Enumerate one Skolem function per existential."""
    k, n = d.num_universal, d.num_vars
    deps = [sorted(s) for s in d.deps]
    tables = [itertools.product((False, True), repeat=1 << len(s)) for s in deps]
    univ_vals = list(itertools.product((False, True), repeat=k))
    for choice in itertools.product(*tables):
        ok = True
        for uv in univ_vals:
            val = dict(zip(range(1, k + 1), uv))
            for i, (s, tab) in enumerate(zip(deps, choice)):
                idx = sum(1 << b for b, u in enumerate(s) if val[u])
                val[k + 1 + i] = tab[idx]
            if not _clauses_true(d.clauses, val):
                ok = False
                break
        if ok:
            return True
    return False


def oracle_taut(f: Formula) -> bool:
    _check_nnf(f)
    names = sorted(propositions(f))
    return all(prop_eval(f, dict(zip(names, bv)))
               for bv in itertools.product((False, True), repeat=len(names)))


def oracle_qcsp(q: QcspInstance) -> bool:
    k, n = q.num_universal, q.num_vars
    for uv in itertools.product((False, True), repeat=k):
        found = False
        for ev in itertools.product((False, True), repeat=n - k):
            val = dict(zip(range(1, n + 1), uv + ev))
            if all(sum(val[v] for v in c) == 1 for c in q.clauses):
                found = True
                break
        if not found:
            return False
    return True


# --- model checking generators ---------------------------------------------------

def _cnf(c: CnfInstance) -> tuple:
    if not c.is_3cnf():
        raise ReductionError("clauses must have at most three literals")
    return normalize_clauses(c.clauses)


def _instance(worlds, edges, labels, props, team, formula) -> ModelCheckInstance:
    k = KripkeStructure.build(worlds, edges, labels, props=props)
    return ModelCheckInstance(k, k.team(team), formula)


def gen_mc_wedge_vee(c: CnfInstance) -> ModelCheckInstance:
    """Edgeless clause worlds; a splitting disjunction of r_j & dep(;p_j)."""
    clauses = _cnf(c)
    n = c.num_vars
    worlds = [f"c{i}" for i in range(1, len(clauses) + 1)]
    labels = {}
    for w, cl in zip(worlds, clauses):
        lab = set()
        for l in cl:
            lab.add(f"r{abs(l)}")
            if l > 0:
                lab.add(_var(l))
        labels[w] = lab
    props = [f"r{j}" for j in range(1, n + 1)] + [_var(j) for j in range(1, n + 1)]
    f = big_or(And(Atom(f"r{j}"), Dep((), _var(j))) for j in range(1, n + 1))
    return _instance(worlds, [], labels, props, worlds, f)


def gen_mc_diamond(c: CnfInstance) -> ModelCheckInstance:
    """Clause worlds point at literal worlds; diamond dep(p1..pn;q)."""
    clauses = _cnf(c)
    n = c.num_vars
    cw = [f"c{i}" for i in range(1, len(clauses) + 1)]
    worlds = list(cw)
    labels = {}
    for j in range(1, n + 1):
        worlds += [f"s{j}_1", f"s{j}_0"]
        labels[f"s{j}_1"] = {_var(j), "q"}
        labels[f"s{j}_0"] = {_var(j)}
    edges = [(w, f"s{abs(l)}_{1 if l > 0 else 0}") for w, cl in zip(cw, clauses) for l in cl]
    props = [_var(j) for j in range(1, n + 1)] + ["q"]
    f = Diamond(Dep(tuple(_var(j) for j in range(1, n + 1)), "q"))
    return _instance(worlds, edges, labels, props, cw, f)


def gen_mc_box_vee(c: CnfInstance) -> ModelCheckInstance:
    """One chain per clause; level j has a side world when x_j is absent."""
    clauses = _cnf(c)
    n = c.num_vars
    worlds, edges, labels = [], [], {}
    starts = []
    for i, cl in enumerate(clauses, 1):
        sign = {abs(l): l > 0 for l in cl}
        s = f"s{i}"
        starts.append(s)
        worlds.append(s)
        labels[s] = set()

        def r(j, i=i):
            return f"r{i}_{j}"

        def rb(j, i=i):
            return f"rb{i}_{j}"
        for j in range(1, n + 1):
            worlds.append(r(j))
            labels[r(j)] = {_var(j)} if sign.get(j, True) else set()
            if j not in sign:
                worlds.append(rb(j))
                labels[rb(j)] = set()
        if n:
            edges.append((s, r(1)))
            if 1 not in sign:
                edges.append((s, rb(1)))
        for j in range(1, n):
            here, nxt = j in sign, (j + 1) in sign
            edges.append((r(j), r(j + 1)))
            if here and not nxt:
                edges.append((r(j), rb(j + 1)))
            elif not here and nxt:
                edges.append((rb(j), r(j + 1)))
            elif not here and not nxt:
                edges.append((rb(j), rb(j + 1)))
    props = [_var(j) for j in range(1, n + 1)]
    f = big_or(boxes(j, Dep((), _var(j))) for j in range(1, n + 1))
    return _instance(worlds, edges, labels, props, starts, f)


def gen_mc_diamond_wedge(c: CnfInstance) -> ModelCheckInstance:
    """Clause worlds pick one ladder per satisfied literal.

    Ladder ``j`` has levels ``1..n``; level ``k`` can step to the sinks
    ``t_k``/``tb_k``.  The ladder of x_k itself is forced to the sink of its
    own sign at level k, every other ladder may go either way.
    """
    clauses = _cnf(c)
    n = c.num_vars
    cw = [f"c{i}" for i in range(1, len(clauses) + 1)]
    worlds = list(cw)
    labels: dict[str, set] = {}
    edges = []
    for k in range(1, n + 1):
        worlds += [f"t{k}", f"tb{k}"]
        labels[f"t{k}"] = {f"r{k}", _var(k)}
        labels[f"tb{k}"] = {f"r{k}"}
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            s, sb = f"s{k}_{j}", f"sb{k}_{j}"
            worlds += [s, sb]
            if k < n:
                edges += [(s, f"s{k + 1}_{j}"), (sb, f"sb{k + 1}_{j}")]
            edges += [(s, f"t{k}"), (sb, f"tb{k}")]
            if j != k:
                edges += [(s, f"tb{k}"), (sb, f"t{k}")]
    for w, cl in zip(cw, clauses):
        for l in cl:
            edges.append((w, f"s1_{l}" if l > 0 else f"sb1_{-l}"))
    props = [f"r{j}" for j in range(1, n + 1)] + [_var(j) for j in range(1, n + 1)]
    body = big_and(diamonds(j, And(Atom(f"r{j}"), Dep((), _var(j)))) for j in range(1, n + 1))
    return _instance(worlds, edges, labels, props, cw, Diamond(body))


def gen_mc_diamond_vee(c: CnfInstance) -> ModelCheckInstance:
    """Clause chains and variable chains; disjunct j reads level j."""
    clauses = _cnf(c)
    n = c.num_vars
    worlds, edges, labels, team = [], [], {}, []
    for i, cl in enumerate(clauses, 1):
        sign = {abs(l): l > 0 for l in cl}
        for j in range(1, n + 1):
            w = f"c{i}_{j}"
            worlds.append(w)
            if j not in sign:
                labels[w] = {"q"}
            else:
                labels[w] = {_var(j)} if sign[j] else set()
            if j > 1:
                edges.append((f"c{i}_{j - 1}", w))
        if n:
            team.append(f"c{i}_1")
    for j in range(1, n + 1):
        for jj in range(1, j + 1):
            w = f"x{j}_{jj}"
            worlds.append(w)
            labels[w] = {"q", _var(j)} if jj == j else {"q"}
            if jj > 1:
                edges.append((f"x{j}_{jj - 1}", w))
        team.append(f"x{j}_1")
    props = [_var(j) for j in range(1, n + 1)] + ["q"]
    f = big_or(diamonds(j - 1, Dep(("q",), _var(j))) for j in range(1, n + 1))
    if n == 0 and clauses:
        # no variables: the formula is bottom and a clause world must fail it
        worlds.append("c0")
        team.append("c0")
    return _instance(worlds, edges, labels, props, team, f)


def gen_mc_vee_nor(c: CnfInstance) -> ModelCheckInstance:
    """Edgeless clause worlds; splitting over classical or of p_j, q_j."""
    clauses = _cnf(c)
    n = c.num_vars
    worlds = [f"c{i}" for i in range(1, len(clauses) + 1)]
    labels = {w: {_var(l) if l > 0 else f"q{-l}" for l in cl} for w, cl in zip(worlds, clauses)}
    props = [_var(j) for j in range(1, n + 1)] + [f"q{j}" for j in range(1, n + 1)]
    f = big_or(Cor(Atom(_var(j)), Atom(f"q{j}")) for j in range(1, n + 1))
    return _instance(worlds, [], labels, props, worlds, f)


_PVAR = re.compile(r"p([1-9][0-9]*)$")


def _var_count(f: Formula) -> int:
    n = 0
    for name in propositions(f):
        m = _PVAR.match(name)
        if not m:
            raise ReductionError(f"variables must be named p1, p2, ...; found {name!r}")
        n = max(n, int(m.group(1)))
    return n


def _impl_translation(f: Formula) -> Formula:
    """Literals become r_i -> literal, both disjunctions become classical."""
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, (Atom, NegAtom)):
        j = _PVAR.match(f.name).group(1)
        return Impl(Atom(f"r{j}"), f)
    if isinstance(f, And):
        return And(_impl_translation(f.left), _impl_translation(f.right))
    if isinstance(f, (Or, Cor)):
        return Cor(_impl_translation(f.left), _impl_translation(f.right))
    raise ReductionError(f"not a propositional NNF formula: {type(f).__name__}")


def _value_worlds(n: int, extra_labels=None):
    worlds, labels = [], {}
    for i in range(1, n + 1):
        s, sb = f"s{i}", f"sb{i}"
        worlds += [s, sb]
        labels[s] = {f"r{i}", _var(i)}
        labels[sb] = {f"r{i}"}
    for w, lab in (extra_labels or {}).items():
        labels[w] |= lab
    return worlds, labels


def gen_mc_pidl_taut(f: Formula) -> ModelCheckInstance:
    """Tautology check: every value-choosing subteam satisfies the translation."""
    _check_nnf(f)
    n = _var_count(f)
    worlds, labels = _value_worlds(n)
    if not worlds:
        # constant formula: one unlabelled world keeps the team non-empty
        worlds, labels = ["s0"], {"s0": set()}
    alpha = big_and(Impl(Atom(f"r{i}"), Dep((), _var(i))) for i in range(1, n + 1))
    props = [f"r{i}" for i in range(1, n + 1)] + [_var(i) for i in range(1, n + 1)]
    return _instance(worlds, [], labels, props, worlds, Impl(alpha, _impl_translation(f)))


def _alternating(q: QbfInstance) -> int:
    if not q.is_alternating():
        raise ReductionError("prefix must be forall x1 exists x2 ... exists xn with n even")
    return q.num_vars


def _quantifier_chain(n: int, last, step) -> Formula:
    """delta_1 for the universal/existential alternation; ``step(i, rest)``
    builds the existential layer for variable ``i``."""
    out = last
    for i in range(n, 0, -1):
        if i % 2 == 0:
            out = step(i, out)
        else:
            out = Impl(Impl(Atom(f"r{i}"), Dep((), _var(i))), out)
    return out


def gen_mc_midl_qbf_sor(q: QbfInstance) -> ModelCheckInstance:
    """Implication simulates forall, splitting disjunction simulates exists.

    A clause with k literals is false exactly when all k literal worlds stay
    in the team; k worlds with pairwise different c-labels need k parts.
    """
    n = _alternating(q)
    if not isinstance(q.matrix, tuple):
        raise ReductionError("this construction needs a CNF matrix")
    clauses = normalize_clauses(q.matrix)
    extra: dict[str, set] = {}
    conj = []
    props = []
    for j, cl in enumerate(clauses, 1):
        props.append(f"c{j}")
        for ell, l in enumerate(cl, 1):
            w = f"s{l}" if l > 0 else f"sb{-l}"
            extra.setdefault(w, set()).update({f"c{j}", f"c{j}_{ell}"})
            props.append(f"c{j}_{ell}")
        d = big_and(Dep((), f"c{j}_{ell}") for ell in range(1, len(cl) + 1))
        parts = [d] * (len(cl) - 1)
        conj.append(Impl(Atom(f"c{j}"), big_or(parts)) if cl else BOT)
    worlds, labels = _value_worlds(n, extra)
    props += [f"r{i}" for i in range(1, n + 1)] + [_var(i) for i in range(1, n + 1)]
    phi = big_and(conj)
    f = _quantifier_chain(n, phi, lambda i, rest: Or(And(Atom(f"r{i}"), Dep((), _var(i))), rest))
    return _instance(worlds, [], labels, props, worlds, f)


def gen_mc_midl_qbf_diamond(q: QbfInstance) -> ModelCheckInstance:
    """Implication simulates forall, diamond simulates exists.

    Universal worlds loop on themselves.  The existential x_2i is reached by
    a chain from ``t_i`` of length i, so its choice happens at the i-th
    diamond.
    """
    n = _alternating(q)
    matrix = cnf_matrix(normalize_clauses(q.matrix)) if isinstance(q.matrix, tuple) else q.matrix
    _check_nnf(matrix)
    worlds, labels = _value_worlds(n)
    edges, team = [], []
    for i in range(1, n + 1, 2):
        edges += [(f"s{i}", f"s{i}"), (f"sb{i}", f"sb{i}")]
        team += [f"s{i}", f"sb{i}"]
    for i in range(1, n // 2 + 1):
        e = 2 * i
        chain = [f"t{i}"] + [f"t{i}_{h}" for h in range(1, i)]
        worlds += chain
        team.append(chain[0])
        edges += list(zip(chain, chain[1:]))
        edges += [(chain[-1], f"s{e}"), (chain[-1], f"sb{e}"),
                  (f"s{e}", f"s{e}"), (f"sb{e}", f"sb{e}")]
    props = [f"r{i}" for i in range(1, n + 1)] + [_var(i) for i in range(1, n + 1)]
    f = _quantifier_chain(n, Diamond(_impl_translation(matrix)),
                          lambda i, rest: rest if i == n else Diamond(rest))
    return _instance(worlds, edges, labels, props, team, f)


MC_GENERATORS = {
    "wedge-vee": gen_mc_wedge_vee,
    "diamond": gen_mc_diamond,
    "box-vee": gen_mc_box_vee,
    "diamond-wedge": gen_mc_diamond_wedge,
    "diamond-vee": gen_mc_diamond_vee,
    "vee-nor": gen_mc_vee_nor,
    "pidl-taut": gen_mc_pidl_taut,
    "midl-qbf-sor": gen_mc_midl_qbf_sor,
    "midl-qbf-diamond": gen_mc_midl_qbf_diamond,
}


# --- satisfiability generators ----------------------------------------------------

def _lit(l: int, positive: bool = True) -> Formula:
    """Literal ``l`` (or its complement when ``positive`` is false)."""
    return Atom(_var(abs(l))) if (l > 0) == positive else NegAtom(_var(abs(l)))


def _tree_parts(n: int, clauses) -> list[Formula]:
    """Parts (i) to (iii): a complete binary tree of p-valuations with f_i
    marking the leaves falsifying clause i."""
    parts = []
    for i in range(1, n + 1):
        parts.append(boxes(i - 1, And(Diamond(boxes(n - i, Atom(_var(i)))),
                                      Diamond(boxes(n - i, NegAtom(_var(i)))))))
    for i, cl in enumerate(clauses, 1):
        parts.append(diamonds(n, big_and([_lit(l, False) for l in cl] + [Atom(f"f{i}")])))
    for i, cl in enumerate(clauses, 1):
        dets = tuple(dict.fromkeys(_var(abs(l)) for l in cl))
        parts.append(boxes(n, Dep(dets, f"f{i}")))
    return parts


def _no_f(m: int) -> list[Formula]:
    return [NegAtom(f"f{i}") for i in range(1, m + 1)]


def gen_sat_dqbf(d: DqbfInstance) -> Formula:
    """Satisfiable exactly when the DQBF is valid."""
    k, n = d.num_universal, d.num_vars
    clauses = normalize_clauses(d.clauses)
    deps = [Dep(tuple(_var(u) for u in sorted(s)), _var(k + 1 + i)) for i, s in enumerate(d.deps)]
    last = boxes(k, diamonds(n - k, big_and(_no_f(len(clauses)) + deps)))
    return big_and(_tree_parts(n, clauses) + [last])


def gen_sat_qbf3(q: QbfInstance) -> Formula:
    """Exists-forall-exists QBF to a formula with constancy atoms only."""
    if not isinstance(q.matrix, tuple):
        raise ReductionError("this construction needs a CNF matrix")
    order = q.order()
    blocks = _merge(order)
    pat = "".join(t for t, _ in blocks)
    if pat not in ("", "e", "a", "ea", "ae", "eae"):
        raise ReductionError(f"prefix must have shape exists* forall* exists*, got {pat}")
    if any(v != i + 1 for i, (_, v) in enumerate(order)):
        raise ReductionError("variables must be numbered in prefix order")
    counts = [len(vs) for _, vs in blocks]
    if pat.startswith("a"):
        counts = [0] + counts
        pat = "e" + pat
    counts += [0] * (3 - len(counts))
    k, ell, n = counts[0], counts[0] + counts[1], q.num_vars
    clauses = normalize_clauses(q.matrix)
    body = big_and([Dep((), _var(i)) for i in range(1, k + 1)] + _no_f(len(clauses)))
    last = diamonds(k, boxes(ell - k, diamonds(n - ell, body)))
    return big_and(_tree_parts(n, clauses) + [last])


def witness_tree(n: int, clauses) -> tuple[KripkeStructure, str]:
    """The complete binary tree of depth n whose leaves carry each valuation
    of p1..pn once, with f_i on the leaves falsifying clause i."""
    clauses = normalize_clauses(clauses)
    worlds, edges, labels = [], [], {}
    for depth in range(n + 1):
        for path in itertools.product("01", repeat=depth):
            w = "w" + "".join(path)
            worlds.append(w)
            if depth:
                edges.append((w[:-1], w))
            if depth == n:
                val = {j: b == "1" for j, b in enumerate(path, 1)}
                lab = {_var(j) for j, v in val.items() if v}
                lab |= {f"f{i}" for i, c in enumerate(clauses, 1)
                        if not _clauses_true([c], val)}
                labels[w] = lab
    props = [_var(j) for j in range(1, n + 1)] + [f"f{i}" for i in range(1, len(clauses) + 1)]
    return KripkeStructure.build(worlds, edges, labels, props=props), "w"


def gen_sat_qcsp(q: QcspInstance, variant: str = "bot") -> Formula:
    """Unsatisfiable exactly when the 1-in-3 QCSP instance is true.

    ``variant="neg"`` uses the negated proposition in place of bottom.
    """
    if variant not in ("bot", "neg"):
        raise ReductionError("variant must be 'bot' or 'neg'")
    k, n, m = q.num_universal, q.num_vars, len(q.clauses)
    p = Atom("p")

    def nabla(i, g):
        for cl in reversed(q.clauses):
            g = Diamond(g) if i in cl else Box(g)
        return g

    parts = []
    for i in range(1, k + 1):
        tail = boxes(i - 1, Diamond(boxes(k - i, p)))
        parts.append(Cor(nabla(i, nabla(i, tail)), boxes(2 * m, tail)))
    for i in range(k + 1, n + 1):
        parts.append(nabla(i, nabla(i, boxes(k, p))))
    parts.append(boxes(2 * m + k, BOT if variant == "bot" else NegAtom("p")))
    return big_and(parts)


# --- random instances ---------------------------------------------------------------

def random_cnf(rng, num_vars: int, num_clauses: int, width: int = 3) -> CnfInstance:
    clauses = []
    for _ in range(num_clauses):
        w = rng.randint(1, min(width, num_vars)) if num_vars else 0
        vs = rng.sample(range(1, num_vars + 1), w)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfInstance(num_vars, tuple(clauses))


def random_qbf(rng, num_vars: int, num_clauses: int) -> QbfInstance:
    """Alternating forall/exists prefix over a random 3CNF matrix."""
    c = random_cnf(rng, num_vars, num_clauses)
    prefix = tuple(("a" if v % 2 else "e", (v,)) for v in range(1, num_vars + 1))
    return QbfInstance(num_vars, prefix, c.clauses)
