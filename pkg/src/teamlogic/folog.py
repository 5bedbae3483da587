"""First-order dependence and independence-friendly logic over finite structures.

Formulas are in negation normal form.  Teams are sets of assignments; an
assignment is a tuple aligned with a fixed variable order, ``None`` marking
variables outside the team's domain.  Flat subformulas (no dependence atoms,
no slashes, no classical or) are checked one assignment at a time.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .formula import (
    And as MAnd, Atom as MAtom, Bot as MBot, Box as MBox, Cor as MCor,
    Dep as MDep, Diamond as MDiamond, Formula, FormulaError, NegAtom as MNegAtom,
    NegDep as MNegDep, Or as MOr, Top as MTop,
)
from .kripke import KripkeStructure, ResourceCapError, Team

__all__ = [
    "FoStructure", "FoTeam", "FoFormula", "Eq", "NEq", "Rel", "NRel", "FTrue",
    "FFalse", "FAnd", "FOr", "FCor", "Exists", "Forall", "FDep", "FNegDep",
    "Count", "FoConfig", "fo_eval", "tarski", "free_vars", "fo_dual", "fo_parse",
    "fo_render", "translate_d2_to_if2", "translate_if2_to_d3",
    "translate_d_to_eso", "EsoSentence", "eso_holds", "translate_mdl_to_d2",
    "find_expansion", "gen_grid", "phi_grid_conjuncts", "gen_phi_grid",
    "gen_phi_infgrid", "violated_conjuncts", "Tile", "TileSet",
    "gen_phi_tiling", "gen_phi_border", "tile_relations", "tile_bruteforce", "fo_load", "fo_store",
    "tiles_load", "tiles_store", "all_teams",
]


# --- structures and teams ------------------------------------------------------------

@dataclass(frozen=True)
class FoStructure:
    universe: tuple
    relations: dict = field(default_factory=dict)   # name -> frozenset of tuples
    arities: dict = field(default_factory=dict)

    def __post_init__(self):
        uni = tuple(self.universe)
        if len(set(uni)) != len(uni):
            raise FormulaError("duplicate universe element")
        object.__setattr__(self, "universe", uni)
        rels, ar = {}, dict(self.arities)
        members = set(uni)
        for name, tuples in self.relations.items():
            ts = frozenset(tuple(t) for t in tuples)
            for t in ts:
                if ar.setdefault(name, len(t)) != len(t):
                    raise FormulaError(f"relation {name} used with two arities")
                if any(a not in members for a in t):
                    raise FormulaError(f"relation {name} mentions an element outside the universe")
            rels[name] = ts
        for name, k in ar.items():
            if k > 2:
                raise FormulaError(f"relation {name} has arity {k} > 2")
            rels.setdefault(name, frozenset())
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "arities", ar)

    def expand(self, **rels) -> "FoStructure":
        """Add or replace relations given as ``name=(arity, tuples)``."""
        r = dict(self.relations)
        ar = dict(self.arities)
        for name, (arity, tuples) in rels.items():
            ts = frozenset(tuple(t) for t in tuples)
            if arity > 2 or any(len(t) != arity for t in ts):
                raise FormulaError(f"relation {name} does not have arity {arity}")
            r[name] = ts
            ar[name] = arity
        out = object.__new__(FoStructure)
        object.__setattr__(out, "universe", self.universe)
        object.__setattr__(out, "relations", r)
        object.__setattr__(out, "arities", ar)
        return out

    def holds(self, name: str, args: tuple) -> bool:
        try:
            return args in self.relations[name]
        except KeyError:
            raise FormulaError(f"unknown relation {name!r}") from None


@dataclass(frozen=True)
class FoTeam:
    """``assignments`` are tuples aligned with ``domain``."""
    domain: tuple
    assignments: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        rows = frozenset(tuple(s) for s in self.assignments)
        for s in rows:
            if len(s) != len(self.domain):
                raise FormulaError("assignment is not total on the team's domain")
        object.__setattr__(self, "assignments", rows)

    @classmethod
    def of(cls, domain, rows) -> "FoTeam":
        return cls(tuple(domain), frozenset(tuple(r) for r in rows))

    @classmethod
    def unit(cls) -> "FoTeam":
        """The team holding only the empty assignment."""
        return cls((), frozenset({()}))


def all_teams(universe, domain) -> Iterator[FoTeam]:
    """Every team over ``domain`` (exponential; small universes only)."""
    rows = list(itertools.product(universe, repeat=len(domain)))
    for r in range(len(rows) + 1):
        for combo in itertools.combinations(rows, r):
            yield FoTeam(tuple(domain), frozenset(combo))


# --- syntax ------------------------------------------------------------------------------

@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FFalse:
    pass


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class NEq:
    left: str
    right: str


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class NRel:
    name: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class FAnd:
    left: "FoFormula"
    right: "FoFormula"


@dataclass(frozen=True)
class FOr:
    """Splitting disjunction."""
    left: "FoFormula"
    right: "FoFormula"


@dataclass(frozen=True)
class FCor:
    """Classical disjunction."""
    left: "FoFormula"
    right: "FoFormula"


@dataclass(frozen=True)
class Exists:
    """``exists var / slash``: the witness may not depend on ``slash``."""
    var: str
    sub: "FoFormula"
    slash: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "slash", frozenset(self.slash))


@dataclass(frozen=True)
class Forall:
    var: str
    sub: "FoFormula"


@dataclass(frozen=True)
class FDep:
    determinants: tuple
    determined: str

    def __post_init__(self):
        object.__setattr__(self, "determinants", tuple(self.determinants))


@dataclass(frozen=True)
class FNegDep:
    determinants: tuple
    determined: str

    def __post_init__(self):
        object.__setattr__(self, "determinants", tuple(self.determinants))


@dataclass(frozen=True)
class Count:
    """``exists^{>=ell} var`` (``op=">="``) or ``exists^{<ell} var`` (``op="<"``)."""
    var: str
    op: str
    ell: int
    sub: "FoFormula"

    def __post_init__(self):
        if self.op not in (">=", "<") or self.ell < 0:
            raise FormulaError("counting quantifier needs op '>=' or '<' and ell >= 0")


FoFormula = Union[FTrue, FFalse, Eq, NEq, Rel, NRel, FAnd, FOr, FCor, Exists,
                  Forall, FDep, FNegDep, Count]

_BIN = (FAnd, FOr, FCor)
_QUANT = (Exists, Forall, Count)


def _kids(f) -> tuple:
    if isinstance(f, _BIN):
        return (f.left, f.right)
    if isinstance(f, _QUANT):
        return (f.sub,)
    return ()


def _nodes(f) -> Iterator:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(_kids(g)))


def _fand(items) -> FoFormula:
    items = list(items)
    if not items:
        return FTrue()
    out = items[0]
    for g in items[1:]:
        out = FAnd(out, g)
    return out


def _for(items) -> FoFormula:
    items = list(items)
    if not items:
        return FFalse()
    out = items[0]
    for g in items[1:]:
        out = FOr(out, g)
    return out


def free_vars(f: FoFormula) -> frozenset:
    """Free variables; the slash set of a quantifier counts as free."""
    if isinstance(f, (FTrue, FFalse)):
        return frozenset()
    if isinstance(f, (Eq, NEq)):
        return frozenset((f.left, f.right))
    if isinstance(f, (Rel, NRel)):
        return frozenset(f.args)
    if isinstance(f, (FDep, FNegDep)):
        return frozenset(f.determinants) | {f.determined}
    if isinstance(f, _BIN):
        return free_vars(f.left) | free_vars(f.right)
    inner = free_vars(f.sub) - {f.var}
    return inner | f.slash if isinstance(f, Exists) else inner


def _all_vars(f: FoFormula) -> set:
    out = set()
    for g in _nodes(f):
        out |= free_vars(g)
        if isinstance(g, _QUANT):
            out.add(g.var)
    return out


def fo_dual(f: FoFormula) -> FoFormula:
    """Negation normal form of the negation of a first-order formula."""
    if isinstance(f, FTrue):
        return FFalse()
    if isinstance(f, FFalse):
        return FTrue()
    if isinstance(f, Eq):
        return NEq(f.left, f.right)
    if isinstance(f, NEq):
        return Eq(f.left, f.right)
    if isinstance(f, Rel):
        return NRel(f.name, f.args)
    if isinstance(f, NRel):
        return Rel(f.name, f.args)
    if isinstance(f, FAnd):
        return FOr(fo_dual(f.left), fo_dual(f.right))
    if isinstance(f, FOr):
        return FAnd(fo_dual(f.left), fo_dual(f.right))
    if isinstance(f, Exists) and not f.slash:
        return Forall(f.var, fo_dual(f.sub))
    if isinstance(f, Forall):
        return Exists(f.var, fo_dual(f.sub))
    if isinstance(f, Count):
        return Count(f.var, "<" if f.op == ">=" else ">=", f.ell, f.sub)
    raise FormulaError(f"dual is defined for first-order formulas only, found {type(f).__name__}")


def _implies(a: FoFormula, b: FoFormula) -> FoFormula:
    return FOr(fo_dual(a), b)


def _is_flat(f: FoFormula) -> bool:
    for g in _nodes(f):
        if isinstance(g, (FDep, FNegDep, FCor)) or (isinstance(g, Exists) and g.slash):
            return False
    return True


# --- evaluation ------------------------------------------------------------------------------

@dataclass(frozen=True)
class FoConfig:
    # caps on the exponential enumerations (witness functions, team splits)
    function_cap: int = 1 << 20
    split_cap: int = 16


def tarski(a: FoStructure, s: dict, f: FoFormula) -> bool:
    """Classical truth of a flat formula under a single assignment."""
    if isinstance(f, FTrue):
        return True
    if isinstance(f, FFalse):
        return False
    if isinstance(f, Eq):
        return s[f.left] == s[f.right]
    if isinstance(f, NEq):
        return s[f.left] != s[f.right]
    if isinstance(f, Rel):
        return a.holds(f.name, tuple(s[v] for v in f.args))
    if isinstance(f, NRel):
        return not a.holds(f.name, tuple(s[v] for v in f.args))
    if isinstance(f, FAnd):
        return tarski(a, s, f.left) and tarski(a, s, f.right)
    if isinstance(f, (FOr, FCor)):
        return tarski(a, s, f.left) or tarski(a, s, f.right)
    if isinstance(f, Exists):
        return any(tarski(a, {**s, f.var: e}, f.sub) for e in a.universe)
    if isinstance(f, Forall):
        return all(tarski(a, {**s, f.var: e}, f.sub) for e in a.universe)
    if isinstance(f, Count):
        n = sum(1 for e in a.universe if tarski(a, {**s, f.var: e}, f.sub))
        return n >= f.ell if f.op == ">=" else n < f.ell
    if isinstance(f, FDep):
        return True
    if isinstance(f, FNegDep):
        return False
    raise FormulaError(f"unknown node {type(f).__name__}")


class _FoEvaluator:
    def __init__(self, a: FoStructure, order: tuple, cfg: FoConfig):
        self.a = a
        self.order = order
        self.pos = {v: i for i, v in enumerate(order)}
        self.cfg = cfg
        self.flat: dict[int, bool] = {}
        self.memo: dict = {}

    def is_flat(self, f) -> bool:
        k = id(f)
        if k not in self.flat:
            self.flat[k] = _is_flat(f)
        return self.flat[k]

    def assignment(self, s: tuple) -> dict:
        return {v: x for v, x in zip(self.order, s) if x is not None}

    def point(self, s: tuple, f) -> bool:
        return tarski(self.a, self.assignment(s), f)

    def ev(self, f, X: frozenset) -> bool:
        if not X:
            return True
        key = (id(f), X)
        if key in self.memo:
            return self.memo[key]
        r = self._ev(f, X)
        self.memo[key] = r
        return r

    def _ev(self, f, X: frozenset) -> bool:
        if self.is_flat(f):
            return all(self.point(s, f) for s in X)
        if isinstance(f, FAnd):
            return self.ev(f.left, X) and self.ev(f.right, X)
        if isinstance(f, FCor):
            return self.ev(f.left, X) or self.ev(f.right, X)
        if isinstance(f, FOr):
            return self._split(f, X)
        if isinstance(f, Forall):
            i = self.pos[f.var]
            return self.ev(f.sub, frozenset(s[:i] + (e,) + s[i + 1:]
                                            for s in X for e in self.a.universe))
        if isinstance(f, Exists):
            return self._exists(f, X)
        if isinstance(f, FDep):
            return self._dep(f, X)
        if isinstance(f, FNegDep):
            return False
        raise FormulaError(f"unexpected node {type(f).__name__}")

    def _split(self, f, X: frozenset) -> bool:
        # downward closure: a flat side may take everything it can
        for flat_side, other in ((f.left, f.right), (f.right, f.left)):
            if self.is_flat(flat_side):
                rest = frozenset(s for s in X if not self.point(s, flat_side))
                return self.ev(other, rest)
        rows = sorted(X, key=repr)
        if len(rows) > self.cfg.split_cap:
            raise ResourceCapError(f"team of {len(rows)} assignments exceeds the split cap")
        for bitsv in itertools.product((0, 1), repeat=len(rows)):
            Y = frozenset(r for r, b in zip(rows, bitsv) if b)
            if self.ev(f.left, Y) and self.ev(f.right, X - Y):
                return True
        return False

    def _exists(self, f: Exists, X: frozenset) -> bool:
        i = self.pos[f.var]
        keep = [j for j, v in enumerate(self.order) if v not in f.slash]
        classes: dict[tuple, list] = {}
        for s in X:
            classes.setdefault(tuple(s[j] for j in keep), []).append(s)
        groups = list(classes.values())
        uni = self.a.universe

        def put(s, e):
            return s[:i] + (e,) + s[i + 1:]
        if self.is_flat(f.sub):
            return all(any(all(self.point(put(s, e), f.sub) for s in g) for e in uni)
                       for g in groups)
        if len(uni) ** len(groups) > self.cfg.function_cap:
            raise ResourceCapError(
                f"{len(uni)}^{len(groups)} witness functions exceed the cap {self.cfg.function_cap}")
        for choice in itertools.product(uni, repeat=len(groups)):
            Y = frozenset(put(s, e) for g, e in zip(groups, choice) for s in g)
            if self.ev(f.sub, Y):
                return True
        return False

    def _dep(self, f: FDep, X: frozenset) -> bool:
        di = [self.pos[v] for v in f.determinants]
        ti = self.pos[f.determined]
        seen: dict = {}
        for s in X:
            k = tuple(s[j] for j in di)
            if seen.setdefault(k, s[ti]) != s[ti]:
                return False
        return True


def fo_eval(a: FoStructure, x: FoTeam, f: FoFormula, cfg: FoConfig = FoConfig()) -> bool:
    """Team semantics truth of ``f`` on the team ``x``."""
    missing = free_vars(f) - set(x.domain)
    if missing:
        raise FormulaError(f"free variables outside the team's domain: {sorted(missing)}")
    for g in _nodes(f):
        if isinstance(g, (Rel, NRel)):
            if g.name not in a.relations:
                raise FormulaError(f"unknown relation {g.name!r}")
            if a.arities[g.name] != len(g.args):
                raise FormulaError(f"relation {g.name} has arity {a.arities[g.name]}")
    order = tuple(x.domain) + tuple(sorted(_all_vars(f) - set(x.domain)))
    pad = (None,) * (len(order) - len(x.domain))
    X = frozenset(s + pad for s in x.assignments)
    return _FoEvaluator(a, order, cfg).ev(f, X)


# --- concrete syntax ---------------------------------------------------------------------

_FO_TOKEN = re.compile(r"""
    (?P<ws>\s+) | (?P<op>!=|>=|\\/|[()=!&|.,;{}/<]) |
    (?P<num>[0-9]+) | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


def _fo_tokens(text: str) -> list[tuple[str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _FO_TOKEN.match(text, pos)
        if not m:
            raise FormulaError(f"unknown token {text[pos]!r} at offset {pos}")
        if not m.group("ws"):
            out.append((m.group(0), pos))
        pos = m.end()
    out.append(("", len(text)))
    return out


class _FoParser:
    """``E x/{y}. f``, ``A x. f``, ``E>=2 x. f``, ``E<2 x. f``, ``P(x,y)``,
    ``x = y``, ``x != y``, ``dep(x;y)``, ``true``, ``false``, ``!`` on atoms,
    ``&``, ``|`` (splitting), ``\\/`` (classical).  Quantifiers scope to the right."""

    def __init__(self, text: str):
        self.toks = _fo_tokens(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def take(self, want: str | None = None) -> str:
        tok, pos = self.toks[self.i]
        if want is not None and tok != want:
            raise FormulaError(f"expected {want!r} at offset {pos}, found {tok or 'end'!r}")
        self.i += 1
        return tok

    def formula(self):
        left = self.disj()
        while self.peek() == "\\/":
            self.take()
            left = FCor(left, self.disj())
        return left

    def disj(self):
        left = self.conj()
        while self.peek() == "|":
            self.take()
            left = FOr(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = FAnd(left, self.unary())
        return left

    def ident(self) -> str:
        tok, pos = self.toks[self.i]
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok or "-"):
            raise FormulaError(f"expected a name at offset {pos}")
        self.i += 1
        return tok

    def names(self, close: str) -> list[str]:
        """Comma separated identifiers up to (not including) ``close``."""
        out = []
        if self.peek() in close:
            return out
        out.append(self.ident())
        while self.peek() == ",":
            self.take()
            out.append(self.ident())
        return out

    def unary(self):
        tok = self.peek()
        nxt = self.toks[self.i + 1][0] if self.i + 1 < len(self.toks) else ""
        if tok in ("E", "A") and (nxt in (">=", "<") or re.fullmatch(r"[A-Za-z_]\w*", nxt or "-")):
            self.take()
            if tok == "E" and self.peek() in (">=", "<"):
                op = self.take()
                if not self.peek().isdigit():
                    raise FormulaError(f"expected a count at offset {self.toks[self.i][1]}")
                ell = int(self.take())
                v = self.ident()
                self.take(".")
                return Count(v, op, ell, self.formula())
            v = self.ident()
            slash = frozenset()
            if self.peek() == "/":
                self.take()
                self.take("{")
                names = self.names("}")
                self.take("}")
                slash = frozenset(names)
            self.take(".")
            body = self.formula()
            if tok == "A":
                return Forall(v, body)
            return Exists(v, body, slash)
        if tok == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if tok == "!":
            self.take()
            g = self.unary()
            if isinstance(g, Rel):
                return NRel(g.name, g.args)
            if isinstance(g, Eq):
                return NEq(g.left, g.right)
            if isinstance(g, FDep):
                return FNegDep(g.determinants, g.determined)
            raise FormulaError("negation is only allowed on atoms")
        if tok == "true":
            self.take()
            return FTrue()
        if tok == "false":
            self.take()
            return FFalse()
        name = self.ident()
        if name == "dep":
            self.take("(")
            left = self.names(";)")
            if self.peek() == ";":
                self.take()
                det = self.ident()
            else:
                if not left:
                    raise FormulaError("empty dep atom")
                det = left.pop()
            self.take(")")
            return FDep(tuple(left), det)
        if self.peek() == "(":
            self.take()
            args = self.names(")")
            self.take(")")
            return Rel(name, tuple(args))
        if self.peek() in ("=", "!="):
            op = self.take()
            other = self.ident()
            return Eq(name, other) if op == "=" else NEq(name, other)
        return Rel(name, ())


def fo_parse(text: str) -> FoFormula:
    p = _FoParser(text)
    f = p.formula()
    p.take("")
    return f


def fo_render(f: FoFormula) -> str:
    # ``tail``: nothing follows g at this level, so a quantifier may stay bare
    def go(g, prec, tail):
        if isinstance(g, FTrue):
            return "true"
        if isinstance(g, FFalse):
            return "false"
        if isinstance(g, Eq):
            return f"{g.left} = {g.right}"
        if isinstance(g, NEq):
            return f"{g.left} != {g.right}"
        if isinstance(g, (Rel, NRel)):
            neg = "!" if isinstance(g, NRel) else ""
            return f"{neg}{g.name}({','.join(g.args)})" if g.args else f"{neg}{g.name}"
        if isinstance(g, (FDep, FNegDep)):
            neg = "!" if isinstance(g, FNegDep) else ""
            return f"{neg}dep({','.join(g.determinants)};{g.determined})"
        if isinstance(g, _BIN):
            sym, p = {FCor: ("\\/", 0), FOr: ("|", 1), FAnd: ("&", 2)}[type(g)]
            wrap = p < prec
            s = f"{go(g.left, p, False)} {sym} {go(g.right, p + 1, tail or wrap)}"
            return f"({s})" if wrap else s
        if isinstance(g, Count):
            head = f"E{g.op}{g.ell} {g.var}. "
        elif isinstance(g, Exists):
            head = f"E {g.var}" + (f"/{{{','.join(sorted(g.slash))}}}" if g.slash else "") + ". "
        else:
            head = f"A {g.var}. "
        s = head + go(g.sub, 0, True)
        return s if tail else f"({s})"
    return go(f, 0, True)


# --- D2 to IF2 and IF2 to D3 --------------------------------------------------------------

_TWO = ("x", "y")


def _other(v: str) -> str:
    return "y" if v == "x" else "x"


def _check_vars(f: FoFormula, allowed):
    extra = _all_vars(f) - set(allowed)
    if extra:
        raise FormulaError(f"variables outside {sorted(allowed)}: {sorted(extra)}")


def _map(f: FoFormula, leaf) -> FoFormula:
    """Rebuild ``f`` bottom-up, replacing nodes through ``leaf`` (None keeps)."""
    r = leaf(f)
    if r is not None:
        return r
    if isinstance(f, _BIN):
        return type(f)(_map(f.left, leaf), _map(f.right, leaf))
    if isinstance(f, Exists):
        return Exists(f.var, _map(f.sub, leaf), f.slash)
    if isinstance(f, Forall):
        return Forall(f.var, _map(f.sub, leaf))
    if isinstance(f, Count):
        return Count(f.var, f.op, f.ell, _map(f.sub, leaf))
    return f


def translate_d2_to_if2(f: FoFormula) -> FoFormula:
    """Dependence atoms become slashed quantifiers over x = y."""
    _check_vars(f, _TWO)

    def leaf(g):
        if isinstance(g, FNegDep):
            return NEq("x", "x")
        if isinstance(g, FDep):
            dets = set(g.determinants)
            v = g.determined
            if v in dets:
                return Eq("x", "x")
            if not dets:
                return Exists(_other(v), Eq("x", "y"), frozenset(_TWO))
            return Exists(_other(v), Eq("x", "y"), frozenset({v}))
        if isinstance(g, Count):
            raise FormulaError("counting quantifiers are not part of D")
        return None
    return _map(f, leaf)


def translate_if2_to_d3(f: FoFormula) -> FoFormula:
    """Slashed quantifiers become dependence atoms, with z as a copy register."""
    _check_vars(f, _TWO)

    def leaf(g):
        if isinstance(g, Count):
            raise FormulaError("counting quantifiers are not part of IF")
        if not (isinstance(g, Exists) and g.slash):
            return None
        body = translate_if2_to_d3(g.sub)
        v, o = g.var, _other(g.var)
        w = g.slash & set(_TWO)
        if w == {o}:
            return Exists("z", FAnd(Eq(v, "z"), Exists(v, FAnd(FDep(("z",), v), body))))
        if w == {v}:
            return Exists(v, FAnd(FDep((o,), v), body))
        if w == set(_TWO):
            return Exists(v, FAnd(FDep((), v), body))
        return Exists(v, body)
    return _map(f, leaf)


# --- D2 to existential second order ---------------------------------------------------------

@dataclass(frozen=True)
class EsoSentence:
    """``exists relations . matrix``; ``team_relation`` carries rel(X) over ``team_vars``."""
    relations: tuple          # (name, arity) pairs, existentially quantified
    matrix: FoFormula
    team_relation: str
    team_vars: tuple


def _vsort(vs) -> tuple:
    return tuple(sorted(vs))


def _forall_block(vs, body: FoFormula) -> FoFormula:
    for v in reversed(_vsort(vs)):
        body = Forall(v, body)
    return body


class _Eso:
    def __init__(self, taken: set):
        self.taken = taken
        self.rels: list[tuple[str, int]] = []
        self.count = 0

    def fresh(self, arity: int) -> str:
        while True:
            self.count += 1
            name = f"S{self.count}"
            if name not in self.taken:
                self.rels.append((name, arity))
                return name

    def go(self, f: FoFormula, R: str, F: tuple) -> FoFormula:
        RF = Rel(R, F)
        if isinstance(f, (Eq, NEq, Rel, NRel, FTrue, FFalse)):
            return _forall_block(F, _implies(RF, f))
        if isinstance(f, FDep):
            v = f.determined
            if v in f.determinants:
                return FTrue()
            rest = tuple(u for u in F if u != v)
            return _forall_block(rest, Count(v, "<", 2, RF))
        if isinstance(f, FNegDep):
            return _forall_block(F, NRel(R, F))
        if isinstance(f, (FOr, FAnd)):
            parts = []
            names = []
            for sub in (f.left, f.right):
                G = _vsort(free_vars(sub))
                if isinstance(f, FAnd) and G == F:
                    names.append(None)
                    parts.append(self.go(sub, R, F))
                    continue
                S = self.fresh(len(G))
                names.append((S, G))
                parts.append(self.go(sub, S, G))
            links = [Rel(n[0], n[1]) for n in names if n is not None]
            if isinstance(f, FOr):
                link = _forall_block(F, _implies(RF, FOr(*links)))
            else:
                if not links:
                    return _fand(parts)
                link = _forall_block(F, _implies(RF, _fand(links)))
            return _fand(parts + [link])
        if isinstance(f, (Exists, Forall)):
            if isinstance(f, Exists) and f.slash:
                raise FormulaError("slashed quantifiers are not part of D")
            G = _vsort(free_vars(f.sub))
            S = self.fresh(len(G))
            inner = self.go(f.sub, S, G)
            y = f.var
            if y in G:
                q = Exists if isinstance(f, Exists) else Forall
                link = _forall_block(F, q(y, _implies(RF, Rel(S, G))))
            else:
                link = _forall_block(F, _implies(RF, Rel(S, G)))
            return FAnd(inner, link)
        raise FormulaError(f"no second-order clause for {type(f).__name__}")


def translate_d_to_eso(f: FoFormula, team_relation: str = "R") -> EsoSentence:
    """Existential second-order rendition of a D2 formula.

    The team enters as relation ``team_relation`` over the free variables in
    sorted order; a sentence gets a 0-ary team relation.
    """
    _check_vars(f, _TWO)
    taken = {g.name for g in _nodes(f) if isinstance(g, (Rel, NRel))} | {team_relation}
    e = _Eso(taken)
    F = _vsort(free_vars(f))
    matrix = e.go(f, team_relation, F)
    return EsoSentence(tuple(e.rels), matrix, team_relation, F)


def _conjuncts(f: FoFormula) -> list:
    if isinstance(f, FAnd):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def find_expansion(a: FoStructure, rels, sentence: FoFormula,
                   cfg: FoConfig = FoConfig()) -> Optional[FoStructure]:
    """First expansion by ``rels`` ((name, arity) pairs) satisfying ``sentence``.

    Conjuncts are tried smallest first so cheap constraints prune early.
    """
    choices = []
    for name, arity in rels:
        tuples = list(itertools.product(a.universe, repeat=arity))
        choices.append([(name, arity, frozenset(c)) for r in range(len(tuples) + 1)
                        for c in itertools.combinations(tuples, r)])
    parts = sorted(_conjuncts(sentence), key=lambda g: sum(1 for _ in _nodes(g)))
    unit = FoTeam.unit()
    for combo in itertools.product(*choices):
        b = a.expand(**{n: (ar, ts) for n, ar, ts in combo})
        if all(fo_eval(b, unit, g, cfg) for g in parts):
            return b
    return None


def eso_holds(a: FoStructure, x: FoTeam, e: EsoSentence) -> bool:
    """Whether some expansion of (a, rel(X)) satisfies the matrix."""
    idx = [x.domain.index(v) for v in e.team_vars]
    rel = frozenset(tuple(s[i] for i in idx) for s in x.assignments)
    b = a.expand(**{e.team_relation: (len(e.team_vars), rel)})
    return find_expansion(b, e.relations, e.matrix) is not None


# --- modal dependence logic into D2 ------------------------------------------------------------

CONST_ELEMENT = "_c"
CONST_MARKER = "C"


def translate_mdl_to_d2(f: Formula, k: KripkeStructure, t) -> tuple[FoStructure, FoTeam, FoFormula]:
    """First-order rendition of ``k, t |= f``.

    The universe is the worlds plus one extra element marked by the unary
    relation ``C``; it plays the constant in the term encoding of dep atoms.
    """
    uni = tuple(k.worlds) + (CONST_ELEMENT,)
    rels = {"R": set(k.edge_list()), CONST_MARKER: {(CONST_ELEMENT,)}}
    ar = {"R": 2, CONST_MARKER: 1}
    for p in k.props:
        if p in rels:
            raise FormulaError(f"proposition name {p!r} clashes with a reserved relation")
        rels[p] = {(w,) for w in k.worlds if p in k.label(w)}
        ar[p] = 1
    a = FoStructure(uni, rels, ar)
    team = FoTeam(("x",), frozenset((w,) for w in k.members(t)))
    counter = itertools.count(1)

    def tr(g, v):
        o = _other(v)
        if isinstance(g, MTop):
            return FTrue()
        if isinstance(g, (MBot, MNegDep)):
            return FFalse()
        if isinstance(g, MAtom):
            return Rel(g.name, (v,))
        if isinstance(g, MNegAtom):
            return NRel(g.name, (v,))
        if isinstance(g, MAnd):
            return FAnd(tr(g.left, v), tr(g.right, v))
        if isinstance(g, MOr):
            return FOr(tr(g.left, v), tr(g.right, v))
        if isinstance(g, MCor):
            return FCor(tr(g.left, v), tr(g.right, v))
        if isinstance(g, MBox):
            return Forall(o, FOr(NRel("R", (v, o)), tr(g.sub, o)))
        if isinstance(g, MDiamond):
            return Exists(o, FAnd(Rel("R", (v, o)), tr(g.sub, o)))
        if isinstance(g, MDep):
            names = list(g.determinants) + [g.determined]
            us = [f"u{next(counter)}" for _ in names]
            links = [FOr(FAnd(Rel(CONST_MARKER, (u,)), Rel(p, (v,))),
                         FAnd(NRel(CONST_MARKER, (u,)), NRel(p, (v,))))
                     for u, p in zip(us, names)]
            body = FAnd(_fand(links), FDep(tuple(us[:-1]), us[-1]))
            for u in reversed(us):
                body = Exists(u, body)
            return body
        raise FormulaError(f"{type(g).__name__} has no first-order rendition here")
    return a, team, tr(f, "x")


# --- grids and tilings ---------------------------------------------------------------------

def _gname(i: int, j: int) -> str:
    return f"{i}_{j}"


def gen_grid(m: int, n: int) -> FoStructure:
    """The grid {0..m} x {0..n} with horizontal H and vertical V successors."""
    if m < 0 or n < 0:
        raise FormulaError("grid dimensions must be non-negative")
    uni = tuple(_gname(i, j) for i in range(m + 1) for j in range(n + 1))
    H = {(_gname(i, j), _gname(i + 1, j)) for i in range(m) for j in range(n + 1)}
    V = {(_gname(i, j), _gname(i, j + 1)) for i in range(m + 1) for j in range(n)}
    return FoStructure(uni, {"H": H, "V": V}, {"H": 2, "V": 2})


def phi_grid_conjuncts() -> dict[str, FoFormula]:
    """The grid-likeness axioms, by name."""
    x, y = "x", "y"
    out: dict[str, FoFormula] = {}
    out["SWroot"] = Exists(x, Forall(y, FAnd(NRel("V", (y, x)), NRel("H", (y, x)))))
    for R in ("V", "H"):
        out[f"functional({R})"] = Forall(x, Forall(y, _implies(
            Rel(R, (x, y)), Exists(x, Eq(y, x), frozenset({y})))))
    for R in ("V", "H"):
        out[f"injective({R})"] = Forall(x, Forall(y, _implies(
            Rel(R, (x, y)), Exists(y, Eq(x, y), frozenset({x})))))
    out["distinct"] = Forall(x, Forall(y, fo_dual(FAnd(Rel("V", (x, y)), Rel("H", (x, y))))))
    for R, R2 in (("V", "H"), ("H", "V")):
        out[f"SWedges({R},{R2})"] = Forall(x, _implies(
            Forall(y, NRel(R, (y, x))),
            Forall(y, _implies(FOr(Rel(R2, (x, y)), Rel(R2, (y, x))),
                               Forall(x, NRel(R, (x, y)))))))
    for R, R2 in (("V", "H"), ("H", "V")):
        out[f"NEedges({R},{R2})"] = Forall(x, _implies(
            Forall(y, NRel(R, (x, y))),
            Forall(y, _implies(FOr(Rel(R2, (x, y)), Rel(R2, (y, x))),
                               Forall(x, NRel(R, (y, x)))))))
    out["join"] = Forall(x, _implies(
        FAnd(Exists(y, Rel("V", (x, y))), Exists(y, Rel("H", (x, y)))),
        Forall(y, _implies(FOr(Rel("V", (x, y)), Rel("H", (x, y))),
                           Exists(x, FOr(Rel("V", (y, x)), Rel("H", (y, x))), frozenset({y}))))))
    return out


def gen_phi_grid() -> FoFormula:
    return _fand(phi_grid_conjuncts().values())


def gen_phi_infgrid() -> FoFormula:
    inf = [Forall("x", Exists("y", Rel(R, ("x", "y")))) for R in ("V", "H")]
    return _fand([gen_phi_grid()] + inf)


def violated_conjuncts(a: FoStructure) -> list[str]:
    unit = FoTeam.unit()
    return [name for name, f in phi_grid_conjuncts().items() if not fo_eval(a, unit, f)]


@dataclass(frozen=True)
class Tile:
    top: str
    right: str
    bottom: str
    left: str


@dataclass(frozen=True)
class TileSet:
    tiles: tuple
    palette: frozenset = frozenset()

    def __post_init__(self):
        tiles = tuple(t if isinstance(t, Tile) else Tile(*t) for t in self.tiles)
        used = {c for t in tiles for c in (t.top, t.right, t.bottom, t.left)}
        pal = frozenset(self.palette) or frozenset(used)
        if not used <= pal:
            raise FormulaError(f"tile colors {sorted(used - pal)} are not in the palette")
        object.__setattr__(self, "tiles", tiles)
        object.__setattr__(self, "palette", pal)


def _P(i: int) -> str:
    return f"P{i}"


def tile_relations(ts: TileSet) -> list[tuple[str, int]]:
    """The unary relations the tiling formulas quantify over, one per tile."""
    return [(_P(i), 1) for i in range(len(ts.tiles))]


def gen_phi_tiling(ts: TileSet) -> FoFormula:
    """psi_T (neighbour matching) and theta_T (exactly one tile per element)."""
    x, y = "x", "y"
    T = ts.tiles
    idx = range(len(T))

    def matching(R, ok):
        return _implies(Rel(R, (x, y)), _fand(
            _implies(Rel(_P(i), (x,)), _for(Rel(_P(j), (y,)) for j in idx if ok(T[i], T[j])))
            for i in idx))
    psi = Forall(x, Forall(y, FAnd(matching("H", lambda s, t: s.right == t.left),
                                   matching("V", lambda s, t: s.top == t.bottom))))
    theta = Forall(x, _for(_fand([Rel(_P(i), (x,))] + [NRel(_P(j), (x,)) for j in idx if j != i])
                           for i in idx))
    return FAnd(psi, theta)


def gen_phi_border(ts: TileSet, c: str) -> FoFormula:
    """Elements on each side of the grid carry tiles with color ``c`` there."""
    if c not in ts.palette:
        raise FormulaError(f"border color {c!r} is not in the palette")
    x, y = "x", "y"
    T = ts.tiles

    def side(no_neighbour, attr):
        return Forall(x, _implies(no_neighbour, _for(Rel(_P(i), (x,)) for i, t in enumerate(T)
                                                     if getattr(t, attr) == c)))
    return _fand([
        side(Forall(y, NRel("V", (y, x))), "bottom"),
        side(Forall(y, NRel("H", (y, x))), "left"),
        side(Forall(y, NRel("V", (x, y))), "top"),
        side(Forall(y, NRel("H", (x, y))), "right"),
    ])


def tile_bruteforce(a: FoStructure, ts: TileSet, border: str | None = None) -> Optional[dict]:
    """A (bordered) tiling of ``a`` as element -> tile index, or None."""
    uni = list(a.universe)
    H = a.relations.get("H", frozenset())
    V = a.relations.get("V", frozenset())
    T = ts.tiles
    cand = {e: list(range(len(T))) for e in uni}
    if border is not None:
        has = {
            "bottom": {b for _, b in V}, "left": {b for _, b in H},
            "top": {b for b, _ in V}, "right": {b for b, _ in H},
        }
        for e in uni:
            cand[e] = [i for i in cand[e]
                       if all(e in has[side] or getattr(T[i], side) == border for side in has)]
    chosen: dict = {}

    def fits(e, i):
        t = T[i]
        for (u, v) in H:
            if u == e and v in chosen and t.right != T[chosen[v]].left:
                return False
            if v == e and u in chosen and T[chosen[u]].right != t.left:
                return False
        for (u, v) in V:
            if u == e and v in chosen and t.top != T[chosen[v]].bottom:
                return False
            if v == e and u in chosen and T[chosen[u]].top != t.bottom:
                return False
        return True

    def go(k):
        if k == len(uni):
            return True
        e = uni[k]
        for i in cand[e]:
            if fits(e, i):
                chosen[e] = i
                if go(k + 1):
                    return True
                del chosen[e]
        return False
    return dict(chosen) if go(0) else None


# --- file formats --------------------------------------------------------------------------

def fo_load(text: str) -> FoStructure:
    """``universe: a b c`` and ``rel NAME/ARITY: (a,b) (b,c)`` lines."""
    uni = None
    rels: dict[str, set] = {}
    ar: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise FormulaError(f"line {lineno}: expected 'section: ...'")
        head = head.strip()
        if head == "universe":
            uni = rest.split()
        elif head.startswith("rel "):
            spec = head[4:].strip()
            name, slash, arity = spec.partition("/")
            if not slash or not arity.isdigit():
                raise FormulaError(f"line {lineno}: relation header needs NAME/ARITY")
            ar[name] = int(arity)
            tuples = rels.setdefault(name, set())
            for tok in re.findall(r"\(([^)]*)\)|(\S+)", rest):
                inner, bare = tok
                t = tuple(x.strip() for x in inner.split(",") if x.strip()) if not bare else (bare,)
                if len(t) != int(arity):
                    raise FormulaError(f"line {lineno}: tuple {t} does not have arity {arity}")
                tuples.add(t)
        else:
            raise FormulaError(f"line {lineno}: unknown section {head!r}")
    if uni is None:
        raise FormulaError("missing 'universe:' section")
    return FoStructure(tuple(uni), rels, ar)


def fo_store(a: FoStructure) -> str:
    lines = ["universe: " + " ".join(map(str, a.universe))]
    for name in sorted(a.relations):
        ts = sorted(a.relations[name], key=lambda t: tuple(map(str, t)))
        body = " ".join("(" + ",".join(map(str, t)) + ")" for t in ts)
        lines.append(f"rel {name}/{a.arities[name]}: {body}".rstrip())
    return "\n".join(lines) + "\n"


def tiles_load(text: str) -> tuple[TileSet, Optional[str]]:
    """``tile: top right bottom left`` lines, optional ``colors:`` and ``border:``."""
    tiles, palette, border = [], [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        items = rest.split()
        if head == "tile" and len(items) == 4:
            tiles.append(Tile(*items))
        elif head == "colors":
            palette.extend(items)
        elif head == "border" and len(items) == 1:
            border = items[0]
        else:
            raise FormulaError(f"line {lineno}: cannot read {line!r}")
    ts = TileSet(tuple(tiles), frozenset(palette))
    if border is not None and border not in ts.palette:
        raise FormulaError(f"border color {border!r} is not in the palette")
    return ts, border


def tiles_store(ts: TileSet, border: str | None = None) -> str:
    lines = ["colors: " + " ".join(sorted(ts.palette))]
    lines += [f"tile: {t.top} {t.right} {t.bottom} {t.left}" for t in ts.tiles]
    if border is not None:
        lines.append(f"border: {border}")
    return "\n".join(lines) + "\n"
