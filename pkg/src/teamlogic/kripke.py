"""Finite Kripke structures and teams.

Worlds are interned to dense indices 0..n-1 and a team is a bitset over
those indices (bit ``i`` set means world ``i`` is a member).  The evaluator
works on raw ints; :class:`Team` is the public wrapper.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

__all__ = [
    "KripkeStructure", "Team", "KripkeError", "ResourceCapError",
    "image", "successor_teams", "minimal_diamond_teams", "load", "store",
    "bits", "popcount", "subsets_by_size", "DEFAULT_DIAMOND_CAP",
]

DEFAULT_DIAMOND_CAP = 24


class KripkeError(ValueError):
    """Malformed structure or reference to an unknown world."""


class ResourceCapError(RuntimeError):
    """An exponential enumeration would exceed its configured cap."""


def popcount(x: int) -> int:
    return bin(x).count("1")


def bits(x: int) -> Iterator[int]:
    """Indices of the set bits of ``x`` in increasing order."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def subsets_by_size(mask: int, sizes: Iterable[int] | None = None) -> Iterator[int]:
    """Submasks of ``mask`` by increasing popcount, ties by numeric value.

    Gosper's hack runs over the compressed index space; spreading back onto
    the positions of ``mask`` is monotone, so numeric order is preserved.
    """
    pos = list(bits(mask))
    n = len(pos)
    for r in (range(n + 1) if sizes is None else sizes):
        if r == 0:
            yield 0
            continue
        if r > n:
            return
        c = (1 << r) - 1
        limit = 1 << n
        while c < limit:
            out = 0
            for i in bits(c):
                out |= 1 << pos[i]
            yield out
            low = c & -c
            ripple = c + low
            c = (((ripple ^ c) >> 2) // low) | ripple


@dataclass(frozen=True)
class Team:
    """A set of worlds, stored as a bitset over the structure's world index."""
    mask: int = 0

    def __len__(self) -> int:
        return popcount(self.mask)

    def __bool__(self) -> bool:
        return self.mask != 0

    def __iter__(self) -> Iterator[int]:
        return bits(self.mask)

    def __or__(self, other: "Team") -> "Team":
        return Team(self.mask | other.mask)

    def __and__(self, other: "Team") -> "Team":
        return Team(self.mask & other.mask)

    def issubset(self, other: "Team") -> bool:
        return self.mask & ~other.mask == 0


@dataclass(frozen=True, eq=False)
class KripkeStructure:
    """Worlds, accessibility relation R and labelling pi.

    Build instances with :meth:`build`; the raw fields are index based.
    ``props`` is the declared proposition alphabet and always contains every
    label.  A declared proposition may hold nowhere.
    """
    worlds: tuple
    succ: tuple            # succ[i] = bitmask of successors of world i
    labels: tuple          # labels[i] = frozenset of propositions at world i
    props: frozenset
    index: dict = field(repr=False)
    prop_mask: dict = field(repr=False)

    @classmethod
    def build(cls, worlds, edges=(), labels=None, props=None) -> "KripkeStructure":
        worlds = tuple(worlds)
        index = {}
        for i, w in enumerate(worlds):
            if w in index:
                raise KripkeError(f"duplicate world {w!r}")
            index[w] = i
        succ = [0] * len(worlds)
        for a, b in edges:
            try:
                succ[index[a]] |= 1 << index[b]
            except KeyError as e:
                raise KripkeError(f"edge mentions unknown world {e.args[0]!r}") from None
        labels = labels or {}
        for w in labels:
            if w not in index:
                raise KripkeError(f"label for unknown world {w!r}")
        labs = tuple(frozenset(labels.get(w, ())) for w in worlds)
        allp = frozenset().union(*labs) if labs else frozenset()
        allp = allp | frozenset(props or ())
        pmask = {p: 0 for p in allp}
        for i, lab in enumerate(labs):
            for p in lab:
                pmask[p] |= 1 << i
        return cls(worlds, tuple(succ), labs, allp, index, pmask)

    @property
    def n(self) -> int:
        return len(self.worlds)

    @property
    def all_mask(self) -> int:
        return (1 << len(self.worlds)) - 1

    def label(self, w) -> frozenset:
        return self.labels[self._idx(w)]

    def successors(self, w) -> list:
        return [self.worlds[j] for j in bits(self.succ[self._idx(w)])]

    def edge_list(self) -> list[tuple]:
        return [(self.worlds[i], self.worlds[j])
                for i in range(self.n) for j in bits(self.succ[i])]

    def num_edges(self) -> int:
        return sum(popcount(s) for s in self.succ)

    def _idx(self, w) -> int:
        try:
            return self.index[w]
        except KeyError:
            raise KripkeError(f"unknown world {w!r}") from None

    def team(self, members: Iterable = ()) -> Team:
        """Team from world identifiers."""
        m = 0
        for w in members:
            m |= 1 << self._idx(w)
        return Team(m)

    def as_mask(self, t) -> int:
        """Accept a Team or an iterable of world identifiers."""
        if isinstance(t, Team):
            if t.mask >> self.n:
                raise KripkeError("team refers to worlds outside the structure")
            return t.mask
        return self.team(t).mask

    def members(self, t) -> list:
        return [self.worlds[i] for i in bits(self.as_mask(t))]

    def image_mask(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= self.succ[i]
        return out

    def dead_mask(self) -> int:
        """Worlds without successors."""
        m = 0
        for i, s in enumerate(self.succ):
            if not s:
                m |= 1 << i
        return m

    def __eq__(self, other) -> bool:
        if not isinstance(other, KripkeStructure):
            return NotImplemented
        return (self.worlds == other.worlds and self.succ == other.succ
                and self.labels == other.labels and self.props == other.props)

    def __hash__(self) -> int:
        return hash((self.worlds, self.succ, self.labels))


def image(k: KripkeStructure, t) -> Team:
    """R(T): all successors of members of ``t``."""
    return Team(k.image_mask(k.as_mask(t)))


def _covers(k: KripkeStructure, members: list[int], cand: int) -> bool:
    return all(k.succ[s] & cand for s in members)


def successor_teams(k: KripkeStructure, t) -> Iterator[Team]:
    """Teams T' within R(T) that meet R(s) for every member s having successors."""
    mask = k.as_mask(t)
    live = [s for s in bits(mask) if k.succ[s]]
    for cand in subsets_by_size(k.image_mask(mask)):
        if _covers(k, live, cand):
            yield Team(cand)


def minimal_diamond_teams(k: KripkeStructure, t, minimal_only: bool = False,
                          cap: int = DEFAULT_DIAMOND_CAP) -> Iterator[Team]:
    """Teams T' within R(T) meeting R(s) for every member s.

    A member without successors makes the stream empty.  With
    ``minimal_only`` only inclusion-minimal covers are produced; that is all
    the evaluator needs since every formula here is downward closed.
    """
    for m in diamond_cover_masks(k, k.as_mask(t), minimal_only, cap):
        yield Team(m)


def diamond_cover_masks(k: KripkeStructure, mask: int, minimal_only: bool = True,
                        cap: int = DEFAULT_DIAMOND_CAP) -> Iterator[int]:
    members = list(bits(mask))
    if any(not k.succ[s] for s in members):
        return
    img = k.image_mask(mask)
    if popcount(img) > cap:
        raise ResourceCapError(f"|R(T)| = {popcount(img)} exceeds the diamond cap {cap}")
    if not minimal_only:
        for cand in subsets_by_size(img):
            if _covers(k, members, cand):
                yield cand
        return
    yield from sorted(_minimal_covers(k, members), key=lambda m: (popcount(m), m))


def _minimal_covers(k: KripkeStructure, members: list[int]) -> set[int]:
    """Minimal hitting sets of the successor sets, by branching on the first unmet member."""
    found: set[int] = set()
    stack = [0]
    while stack:
        chosen = stack.pop()
        unmet = next((s for s in members if not k.succ[s] & chosen), None)
        if unmet is None:
            if all(not _covers(k, members, chosen & ~(1 << b)) for b in bits(chosen)):
                found.add(chosen)
            continue
        for b in bits(k.succ[unmet]):
            stack.append(chosen | (1 << b))
    return found


# --- file format ----------------------------------------------------------------

def load(text: str) -> tuple[KripkeStructure, Team]:
    """Parse the line-based structure format (see README)."""
    worlds = None
    edges: list[tuple[str, str]] = []
    labels: dict[str, list[str]] = {}
    team = None
    props: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise KripkeError(f"line {lineno}: expected 'section: ...'")
        head = head.strip()
        items = rest.split()
        if head == "worlds":
            worlds = items
        elif head == "edges":
            for e in items:
                a, arrow, b = e.partition("->")
                if not arrow or not a or not b:
                    raise KripkeError(f"line {lineno}: bad edge {e!r}")
                edges.append((a, b))
        elif head.startswith("label "):
            w = head[len("label "):].strip()
            labels.setdefault(w, []).extend(items)
        elif head == "team":
            team = items
        elif head == "props":
            props.extend(items)
        else:
            raise KripkeError(f"line {lineno}: unknown section {head!r}")
    if worlds is None:
        raise KripkeError("missing 'worlds:' section")
    if team is None:
        raise KripkeError("missing 'team:' section")
    edges = list(dict.fromkeys(edges))
    k = KripkeStructure.build(worlds, edges, labels, props=props)
    return k, k.team(team)


def store(k: KripkeStructure, t=None) -> str:
    lines = ["worlds: " + " ".join(map(str, k.worlds))]
    lines.append("edges: " + " ".join(f"{a}->{b}" for a, b in k.edge_list()))
    extra = sorted(k.props - frozenset().union(*k.labels)) if k.labels else sorted(k.props)
    if extra:
        lines.append("props: " + " ".join(extra))
    for w, lab in zip(k.worlds, k.labels):
        if lab:
            lines.append(f"label {w}: " + " ".join(sorted(lab)))
    members = k.members(t) if t is not None else []
    lines.append("team: " + " ".join(map(str, members)))
    return "\n".join(lines) + "\n"
