"""Formulas of modal dependence logic (MDL) and its intuitionistic extension (MIDL).

Formulas are immutable trees in negation normal form.  Negation only sits on
atoms and dependence atoms.  Two disjunctions are available: the splitting
disjunction ``Or`` (written ``|``) and the classical one ``Cor`` (written
``\\/``, shown as a circled cross in print).

Most transforms here are written against :func:`fold`, a post-order walk that
uses an explicit stack so deeply nested input does not hit the interpreter's
recursion limit.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Iterator, TypeVar, Union

__all__ = [
    "Top", "Bot", "Atom", "NegAtom", "Dep", "NegDep", "And", "Or", "Cor",
    "Impl", "Box", "Diamond", "Formula", "TOP", "BOT",
    "FragmentSignature", "UNBOUNDED", "OPERATORS", "FormulaSyntaxError",
    "FormulaError", "parse", "render", "dual", "substitute", "signature_of",
    "eliminate_const_neg", "expand_dep_via_classical_or",
    "distribute_classical_or", "midl_rewrites", "fold", "subformulas",
    "propositions", "size", "modal_depth", "dep_atoms", "count_classical_or",
    "is_ml", "is_flat", "big_and", "big_or", "big_cor", "boxes", "diamonds",
]


class FormulaError(ValueError):
    """A formula violates the precondition of a transform."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.column = col


# --- AST --------------------------------------------------------------------

@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class NegAtom:
    name: str


@dataclass(frozen=True)
class Dep:
    """dep(determinants; determined).  Zero determinants means constancy."""
    determinants: tuple[str, ...]
    determined: str

    def __post_init__(self):
        object.__setattr__(self, "determinants", tuple(self.determinants))

    @property
    def arity(self) -> int:
        return len(self.determinants)


@dataclass(frozen=True)
class NegDep:
    determinants: tuple[str, ...]
    determined: str

    def __post_init__(self):
        object.__setattr__(self, "determinants", tuple(self.determinants))

    @property
    def arity(self) -> int:
        return len(self.determinants)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    """Splitting (dependence) disjunction."""
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Cor:
    """Classical disjunction: the whole team satisfies one side."""
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Impl:
    """Intuitionistic implication."""
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Box:
    sub: "Formula"


@dataclass(frozen=True)
class Diamond:
    sub: "Formula"


Formula = Union[Top, Bot, Atom, NegAtom, Dep, NegDep, And, Or, Cor, Impl, Box, Diamond]
TOP = Top()
BOT = Bot()

_LEAVES = (Top, Bot, Atom, NegAtom, Dep, NegDep)
_BINARY = (And, Or, Cor, Impl)
_UNARY = (Box, Diamond)


def children(f: Formula) -> tuple:
    if isinstance(f, _BINARY):
        return (f.left, f.right)
    if isinstance(f, _UNARY):
        return (f.sub,)
    return ()


def rebuild(f: Formula, kids: tuple) -> Formula:
    """Return ``f`` with its children replaced (``f`` itself if unchanged)."""
    if isinstance(f, _BINARY):
        if kids[0] is f.left and kids[1] is f.right:
            return f
        return type(f)(kids[0], kids[1])
    if isinstance(f, _UNARY):
        return f if kids[0] is f.sub else type(f)(kids[0])
    return f


T = TypeVar("T")


def fold(f: Formula, fn: Callable[[Formula, tuple], T]) -> T:
    """Post-order fold: ``fn(node, child_results)`` with an explicit stack."""
    stack: list[tuple[Formula, bool]] = [(f, False)]
    results: list = []
    while stack:
        node, expanded = stack.pop()
        kids = children(node)
        if expanded or not kids:
            n = len(kids)
            args = tuple(results[len(results) - n:]) if n else ()
            if n:
                del results[len(results) - n:]
            results.append(fn(node, args))
        else:
            stack.append((node, True))
            for k in reversed(kids):
                stack.append((k, False))
    return results[0]


def subformulas(f: Formula) -> Iterator[Formula]:
    """Preorder, left to right."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def modal_depth(f: Formula) -> int:
    def step(node, kids):
        d = max(kids, default=0)
        return d + 1 if isinstance(node, _UNARY) else d
    return fold(f, step)


def propositions(f: Formula) -> set[str]:
    out: set[str] = set()
    for g in subformulas(f):
        if isinstance(g, (Atom, NegAtom)):
            out.add(g.name)
        elif isinstance(g, (Dep, NegDep)):
            out.update(g.determinants)
            out.add(g.determined)
    return out


def dep_atoms(f: Formula, negated: bool = False) -> list:
    """Positive dependence atom occurrences in preorder (or negated ones)."""
    kind = NegDep if negated else Dep
    return [g for g in subformulas(f) if isinstance(g, kind)]


def count_classical_or(f: Formula) -> int:
    return sum(1 for g in subformulas(f) if isinstance(g, Cor))


def is_ml(f: Formula) -> bool:
    """Plain modal logic: no dependence atoms, no classical or, no implication."""
    return not any(isinstance(g, (Dep, NegDep, Cor, Impl)) for g in subformulas(f))


is_flat = is_ml


# --- constructors ---------------------------------------------------------------

def _big(op, items, empty):
    items = list(items)
    if not items:
        return empty
    out = items[0]
    for g in items[1:]:
        out = op(out, g)
    return out


def big_and(items) -> Formula:
    return _big(And, items, TOP)


def big_or(items) -> Formula:
    return _big(Or, items, BOT)


def big_cor(items) -> Formula:
    return _big(Cor, items, BOT)


def boxes(n: int, f: Formula) -> Formula:
    for _ in range(n):
        f = Box(f)
    return f


def diamonds(n: int, f: Formula) -> Formula:
    for _ in range(n):
        f = Diamond(f)
    return f


# --- parsing ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op>->|\\/|\[\]|<>|[|&!(),;])
  | (?P<uni>[⊤⊥¬∧∨⊗→□◇])
  | (?P<ident>[a-z][a-z0-9_]*'*)
""", re.VERBOSE)

_UNICODE = {"⊤": "true", "⊥": "false", "¬": "!", "∧": "&", "∨": "|",
            "⊗": "\\/", "→": "->", "□": "[]", "◇": "<>"}
_KEYWORDS = {"true", "false", "dep"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unknown token {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind == "uni":
            out.append((_UNICODE[m.group()], pos))
        elif kind != "ws":
            out.append((m.group(), pos))
        pos = m.end()
    out.append(("", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def error(self, msg: str):
        raise FormulaSyntaxError(msg, self.text, self.toks[self.i][1])

    def take(self, tok: str | None = None) -> str:
        t = self.peek()
        if tok is not None and t != tok:
            self.error(f"expected {tok!r}, found {t or 'end of input'!r}")
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.peek()
        if not t or not ("a" <= t[0] <= "z") or t in _KEYWORDS:
            self.error(f"expected proposition name, found {t or 'end of input'!r}")
        return self.take()

    def formula(self) -> Formula:
        # right-associative implication, iteratively
        parts = [self.cor()]
        while self.peek() == "->":
            self.take()
            parts.append(self.cor())
        out = parts.pop()
        while parts:
            out = Impl(parts.pop(), out)
        return out

    def _chain(self, sub, tok, cls):
        out = sub()
        while self.peek() == tok:
            self.take()
            out = cls(out, sub())
        return out

    def cor(self):
        return self._chain(self.dor, "\\/", Cor)

    def dor(self):
        return self._chain(self.conj, "|", Or)

    def conj(self):
        return self._chain(self.unary, "&", And)

    def unary(self) -> Formula:
        prefix = []
        while self.peek() in ("[]", "<>"):
            prefix.append(self.take())
        t = self.peek()
        if t == "!":
            self.take()
            a = self.atom()
            if isinstance(a, Atom):
                out = NegAtom(a.name)
            elif isinstance(a, Dep):
                out = NegDep(a.determinants, a.determined)
            else:
                self.error("negation applies only to propositions and dep atoms")
        elif t == "(":
            self.take()
            out = self.formula()
            self.take(")")
        else:
            out = self.atom()
        for m in reversed(prefix):
            out = Box(out) if m == "[]" else Diamond(out)
        return out

    def atom(self) -> Formula:
        t = self.peek()
        if t == "true":
            self.take()
            return TOP
        if t == "false":
            self.take()
            return BOT
        if t == "dep":
            self.take()
            self.take("(")
            names = []
            if self.peek() == ";":
                self.take()
                q = self.ident()
                self.take(")")
                return Dep((), q)
            names.append(self.ident())
            while self.peek() == ",":
                self.take()
                names.append(self.ident())
            if self.peek() == ")" and len(names) == 1:
                self.take()
                return Dep((), names[0])
            self.take(";")
            q = self.ident()
            self.take(")")
            return Dep(tuple(names), q)
        return Atom(self.ident())


def parse(text: str) -> Formula:
    """Parse the ASCII grammar (unicode connectives are accepted as aliases)."""
    p = _Parser(text)
    if p.peek() == "":
        p.error("empty formula")
    f = p.formula()
    if p.peek() != "":
        p.error(f"unexpected {p.peek()!r}")
    return f


# --- rendering ----------------------------------------------------------------

_PREC = {Impl: 0, Cor: 1, Or: 2, And: 3}
_SYM = {Impl: " -> ", Cor: " \\/ ", Or: " | ", And: " & "}


def _dep_text(d) -> str:
    return f"dep({','.join(d.determinants)};{d.determined})"


def render(f: Formula) -> str:
    """Inverse of :func:`parse` (minimal parentheses)."""
    def step(node, kids):
        if isinstance(node, Top):
            return ("true", 4)
        if isinstance(node, Bot):
            return ("false", 4)
        if isinstance(node, Atom):
            return (node.name, 4)
        if isinstance(node, NegAtom):
            return ("!" + node.name, 4)
        if isinstance(node, Dep):
            return (_dep_text(node), 4)
        if isinstance(node, NegDep):
            return ("!" + _dep_text(node), 4)
        if isinstance(node, _UNARY):
            s, p = kids[0]
            sym = "[]" if isinstance(node, Box) else "<>"
            return (sym + (s if p == 4 else f"({s})"), 4)
        prec = _PREC[type(node)]
        (ls, lp), (rs, rp) = kids
        if isinstance(node, Impl):   # right associative
            lneed, rneed = lp <= prec, rp < prec
        else:                         # left associative
            lneed, rneed = lp < prec, rp <= prec
        ls = f"({ls})" if lneed else ls
        rs = f"({rs})" if rneed else rs
        return (ls + _SYM[type(node)] + rs, prec)
    return fold(f, step)[0]


# --- signatures ---------------------------------------------------------------

class _Unbounded:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNBOUNDED"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()

OPERATORS = ("box", "diamond", "and", "dep-or", "classical-or", "neg",
             "top", "bot", "impl", "dep")


@dataclass(frozen=True)
class FragmentSignature:
    """Operator set M plus the dependence arity bound k of a fragment MDL_k(M).

    ``arity_bound`` is an int, ``UNBOUNDED``, or None when no dep atom occurs.
    """
    operators: frozenset
    arity_bound: object = None

    def __post_init__(self):
        ops = frozenset(self.operators)
        bad = ops - set(OPERATORS)
        if bad:
            raise ValueError(f"unknown operators: {sorted(bad)}")
        object.__setattr__(self, "operators", ops)

    def __contains__(self, op: str) -> bool:
        return op in self.operators

    def within(self, allowed) -> bool:
        return self.operators <= set(allowed)


_OP_OF = {Top: "top", Bot: "bot", And: "and", Or: "dep-or", Cor: "classical-or",
          Impl: "impl", Box: "box", Diamond: "diamond", NegAtom: "neg", Dep: "dep"}


def signature_of(f: Formula) -> FragmentSignature:
    ops = set()
    arity = None
    for g in subformulas(f):
        if isinstance(g, NegDep):
            ops.update(("neg", "dep"))
        elif type(g) in _OP_OF:
            ops.add(_OP_OF[type(g)])
        if isinstance(g, (Dep, NegDep)):
            arity = g.arity if arity is None else max(arity, g.arity)
    return FragmentSignature(frozenset(ops), arity)


# --- transforms ---------------------------------------------------------------

def dual(f: Formula) -> Formula:
    """Dual of a plain modal formula: swap constants, literals, and/or, box/diamond."""
    def step(node, kids):
        if isinstance(node, Top):
            return BOT
        if isinstance(node, Bot):
            return TOP
        if isinstance(node, Atom):
            return NegAtom(node.name)
        if isinstance(node, NegAtom):
            return Atom(node.name)
        if isinstance(node, And):
            return Or(*kids)
        if isinstance(node, Or):
            return And(*kids)
        if isinstance(node, Box):
            return Diamond(kids[0])
        if isinstance(node, Diamond):
            return Box(kids[0])
        raise FormulaError(f"dual is defined for plain modal formulas only, found {type(node).__name__}")
    return fold(f, step)


def substitute(f: Formula, target: Formula, replacement: Formula) -> Formula:
    """Replace every subtree structurally equal to ``target``."""
    def step(node, kids):
        node = rebuild(node, kids)
        return replacement if node == target else node
    return fold(f, step)


def _literal(p: str, positive: bool) -> Formula:
    return Atom(p) if positive else NegAtom(p)


def expand_dep_via_classical_or(a: Dep) -> Formula:
    """dep(p1..pn;q) as a splitting disjunction over sign patterns of p1..pn."""
    if not isinstance(a, Dep):
        raise FormulaError("expected a positive dep atom")
    q = a.determined
    qq = Cor(Atom(q), NegAtom(q))
    if not a.determinants:
        return qq
    disjuncts = []
    for signs in itertools.product((True, False), repeat=a.arity):
        lits = [_literal(p, s) for p, s in zip(a.determinants, signs)]
        disjuncts.append(big_and(lits + [qq]))
    return big_or(disjuncts)


def distribute_classical_or(f: Formula, index: int) -> Formula:
    """Resolve every classical or; bit j of ``index`` picks the side of the j-th one.

    Occurrences are numbered in left-to-right preorder; a 0 bit keeps the left
    argument.  Occurrences discarded by an earlier choice still consume a bit,
    so every index below ``2 ** count_classical_or(f)`` is valid.
    """
    n = count_classical_or(f)
    if index < 0 or index >= 1 << n:
        raise FormulaError(f"index {index} out of range for {n} classical disjunctions")
    if isinstance(f, Impl) or any(isinstance(g, Impl) for g in subformulas(f)):
        raise FormulaError("distribution is defined for formulas without implication")
    counter = 0
    out: list[Formula] = []
    work: list[tuple[Formula, bool]] = [(f, False)]
    while work:
        g, done = work.pop()
        kids = children(g)
        if not done and kids:
            if isinstance(g, Cor):
                # remember which side this occurrence keeps, numbered in preorder
                work.append((Cor(BOT, TOP) if (index >> counter) & 1 else Cor(TOP, BOT), True))
                counter += 1
            else:
                work.append((g, True))
            for kid in reversed(kids):
                work.append((kid, False))
            continue
        n_k = len(kids)
        args = tuple(out[len(out) - n_k:]) if n_k else ()
        if n_k:
            del out[len(out) - n_k:]
        if isinstance(g, Cor) and done:
            out.append(args[1] if isinstance(g.left, Bot) else args[0])
        else:
            out.append(rebuild(g, args))
    return out[0]


def midl_rewrites(f: Formula, rule: str) -> Formula:
    """Apply one MIDL equivalence everywhere it matches.

    * ``neg-as-impl``: !p becomes p -> false
    * ``dep-as-impl``: dep(p1..pn-1;pn) becomes (dep(;p1) & ... ) -> dep(;pn)
    * ``impl-as-dual-or``: a -> b becomes dual(a) | b (a, b plain modal)
    """
    if rule == "neg-as-impl":
        def step(node, kids):
            if isinstance(node, NegAtom):
                return Impl(Atom(node.name), BOT)
            return rebuild(node, kids)
    elif rule == "dep-as-impl":
        def step(node, kids):
            if isinstance(node, Dep) and node.determinants:
                ante = big_and(Dep((), p) for p in node.determinants)
                return Impl(ante, Dep((), node.determined))
            return rebuild(node, kids)
    elif rule == "impl-as-dual-or":
        def step(node, kids):
            node = rebuild(node, kids)
            if isinstance(node, Impl):
                if not (is_ml(node.left) and is_ml(node.right)):
                    raise FormulaError("impl-as-dual-or needs plain modal arguments")
                return Or(dual(node.left), node.right)
            return node
    else:
        raise FormulaError(f"unknown rule {rule!r}")
    return fold(f, step)


def eliminate_const_neg(f: Formula, k):
    """Remove atomic negation and constants by relabelling the structure.

    Every negated atom !p becomes a fresh atom p' that holds exactly where p
    fails; true and false become atoms t and f, with t on every world and f
    nowhere.  Negated dep atoms are left alone.
    """
    from .kripke import KripkeStructure

    props = set(propositions(f)) | set(k.props)
    negated = sorted({g.name for g in subformulas(f) if isinstance(g, NegAtom)})
    fresh = {p + "'" for p in negated} | {"t", "f"}
    clash = fresh & props
    if clash:
        raise FormulaError(f"reserved fresh names already in use: {sorted(clash)}")

    def step(node, kids):
        if isinstance(node, NegAtom):
            return Atom(node.name + "'")
        if isinstance(node, Top):
            return Atom("t")
        if isinstance(node, Bot):
            return Atom("f")
        return rebuild(node, kids)

    g = fold(f, step)
    labels = {}
    for w in k.worlds:
        lab = set(k.label(w)) | {"t"}
        lab.update(p + "'" for p in negated if p not in k.label(w))
        labels[w] = lab
    k2 = KripkeStructure.build(k.worlds, k.edge_list(), labels,
                               props=set(k.props) | fresh)
    return g, k2
