"""Finite posets with the Alexandrov topology.

Convention used throughout the package: open sets are up-sets, the minimal
open neighbourhood of ``x`` is ``U_x = {y : y >= x}``, and sheaves carry
restriction maps pointing upward (from ``x`` to every ``y > x``).
"""
from __future__ import annotations

from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence


class PosetError(ValueError):
    pass


def validate_relation(elements: Sequence[str], relation: Iterable[tuple[str, str]]) -> str | None:
    """Check a raw strict order; return a description of the first violation or None."""
    elems = set(elements)
    if len(elems) != len(elements):
        return "duplicate element identifiers"
    rel = set()
    for x, y in relation:
        if x not in elems or y not in elems:
            return f"unknown element in pair {x}<{y}"
        rel.add((x, y))
    for x, y in sorted(rel):
        if x == y:
            return f"irreflexivity violated at {x}<{x}"
        if (y, x) in rel:
            return f"antisymmetry violated by {x}<{y} and {y}<{x}"
    for x, y in sorted(rel):
        for y2, z in sorted(rel):
            if y2 == y and (x, z) not in rel:
                return f"transitivity violated: {x}<{y}, {y}<{z} but not {x}<{z}"
    return None


def transitive_closure(elements: Sequence[str], relation: Iterable[tuple[str, str]]) -> set[tuple[str, str]]:
    above = {x: set() for x in elements}
    for x, y in relation:
        above[x].add(y)
    changed = True
    while changed:
        changed = False
        for x in elements:
            new = set()
            for y in above[x]:
                new |= above[y]
            if not new <= above[x]:
                above[x] |= new
                changed = True
    return {(x, y) for x in elements for y in above[x]}


class Poset:
    """A finite poset; ``relation`` holds the strict pairs ``x < y`` (transitively closed)."""

    def __init__(self, elements: Sequence[str], relation: Iterable[tuple[str, str]], *, close: bool = True,
                 parent: "Poset | None" = None):
        self.elements = tuple(elements)
        rel = set(relation)
        if close:
            rel = transitive_closure(self.elements, rel)
        problem = validate_relation(self.elements, rel)
        if problem:
            raise PosetError(problem)
        self.relation = frozenset(rel)
        self.parent = parent
        self._index = {x: i for i, x in enumerate(self.elements)}
        self._subs: dict[frozenset, Poset] = {}

    def __repr__(self):
        return f"Poset({list(self.elements)})"

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x):
        return x in self._index

    def __iter__(self):
        return iter(self.elements)

    def key(self) -> tuple:
        return (self.elements, tuple(sorted(self.relation)))

    def __eq__(self, other):
        return isinstance(other, Poset) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def index(self, x: str) -> int:
        return self._index[x]

    def lt(self, x: str, y: str) -> bool:
        return (x, y) in self.relation

    def le(self, x: str, y: str) -> bool:
        return x == y or (x, y) in self.relation

    @cached_property
    def covers(self) -> tuple[tuple[str, str], ...]:
        """Covering relations x ⋖ y in element order."""
        out = []
        for x, y in self.relation:
            if not any((x, z) in self.relation and (z, y) in self.relation for z in self.elements):
                out.append((x, y))
        return tuple(sorted(out, key=lambda p: (self._index[p[0]], self._index[p[1]])))

    @cached_property
    def _up(self) -> dict[str, tuple[str, ...]]:
        return {x: tuple(y for y in self.elements if self.le(x, y)) for x in self.elements}

    def up(self, x: str) -> tuple[str, ...]:
        """Minimal open neighbourhood U_x (elements in poset order)."""
        return self._up[x]

    def down(self, x: str) -> tuple[str, ...]:
        return tuple(y for y in self.elements if self.le(y, x))

    @cached_property
    def diamonds(self) -> tuple[tuple[str, str, str, str], ...]:
        """All (x, y1, y2, z) with x⋖y1⋖z, x⋖y2⋖z and y1 before y2."""
        cov = set(self.covers)
        out = []
        for x in self.elements:
            ups = [y for y in self.elements if (x, y) in cov]
            for y1, y2 in combinations(ups, 2):
                for z in self.elements:
                    if (y1, z) in cov and (y2, z) in cov:
                        out.append((x, y1, y2, z))
        return tuple(out)

    def cover_path(self, x: str, y: str) -> tuple[str, ...]:
        """A deterministic maximal chain of covers from x to y (x <= y)."""
        if x == y:
            return (x,)
        if not self.lt(x, y):
            raise PosetError(f"{x} is not below {y}")
        for a, b in self.covers:
            if a == x and self.le(b, y):
                return (x,) + self.cover_path(b, y)
        raise PosetError("no cover path")  # unreachable for finite posets

    def sort(self, members: Iterable[str]) -> tuple[str, ...]:
        m = set(members)
        unknown = m - set(self.elements)
        if unknown:
            raise PosetError(f"unknown elements {sorted(unknown)}")
        return tuple(x for x in self.elements if x in m)

    def is_up_set(self, members: Iterable[str]) -> bool:
        m = set(members)
        return all(y in m for x, y in self.relation if x in m)

    def is_down_set(self, members: Iterable[str]) -> bool:
        m = set(members)
        return all(x in m for x, y in self.relation if y in m)

    def sub(self, members: Iterable[str]) -> "Poset":
        """Induced subposet (cached, keeps element order of the parent)."""
        ms = self.sort(members)
        key = frozenset(ms)
        if key not in self._subs:
            rel = [(x, y) for x, y in self.relation if x in key and y in key]
            self._subs[key] = Poset(ms, rel, close=False, parent=self)
        return self._subs[key]

    def height(self, members: Iterable[str] | None = None) -> int:
        ms = self.elements if members is None else self.sort(members)
        best = {x: 0 for x in ms}
        for x in reversed(ms):
            for y in ms:
                if self.lt(x, y):
                    best[x] = max(best[x], best[y] + 1)
        return max(best.values(), default=-1)

    def is_connected(self, members: Iterable[str] | None = None) -> bool:
        ms = list(self.elements if members is None else self.sort(members))
        if not ms:
            return True
        seen = {ms[0]}
        stack = [ms[0]]
        mset = set(ms)
        while stack:
            x = stack.pop()
            for y in mset:
                if y not in seen and (self.lt(x, y) or self.lt(y, x)):
                    seen.add(y)
                    stack.append(y)
        return seen == mset


def classify_subset(p: Poset, s: Iterable[str]) -> str:
    s = set(s)
    p.sort(s)
    up, down = p.is_up_set(s), p.is_down_set(s)
    if up and down:
        return "clopen"
    if up:
        return "open"
    if down:
        return "closed"
    return "neither"


class Subspace:
    """A subset of a poset tagged open / closed / arbitrary."""

    def __init__(self, parent: Poset, members: Iterable[str], kind: str = "arbitrary"):
        self.parent = parent
        self.members = parent.sort(members)
        if kind not in ("open", "closed", "arbitrary"):
            raise PosetError(f"bad subspace kind {kind!r}")
        if kind == "open" and not parent.is_up_set(self.members):
            raise PosetError(f"{list(self.members)} is not open (not an up-set)")
        if kind == "closed" and not parent.is_down_set(self.members):
            bad = next((x, y) for x, y in sorted(parent.relation) if y in self.members and x not in self.members)
            raise PosetError(f"{list(self.members)} is not closed: {bad[0]}<{bad[1]}")
        self.kind = kind

    def __repr__(self):
        return f"Subspace({self.kind}, {list(self.members)})"

    def __contains__(self, x):
        return x in self.members

    @property
    def poset(self) -> Poset:
        return self.parent.sub(self.members)

    def complement(self) -> "Subspace":
        kind = {"open": "closed", "closed": "open"}.get(self.kind, "arbitrary")
        return Subspace(self.parent, [x for x in self.parent.elements if x not in self.members], kind)


def closed_subsets(p: Poset) -> list[tuple[str, ...]]:
    """All down-sets of p, including the empty one, by size then position."""
    out = {frozenset()}
    for x in p.elements:
        # unions of down-closures of points are exactly the down-sets
        below = set(p.down(x)) | {x}
        out |= {d | below for d in out}
    return sorted((p.sort(d) for d in out), key=lambda d: (len(d), [p.index(x) for x in d]))


def strict_chains(p: Poset, s: Iterable[str] | None, k: int) -> list[tuple[str, ...]]:
    """Strictly increasing (k+1)-tuples inside ``s``, lexicographic by element order."""
    ms = p.elements if s is None else p.sort(s)
    if k < 0:
        return []
    chains: list[tuple[str, ...]] = [(x,) for x in ms]
    for _ in range(k):
        chains = [c + (y,) for c in chains for y in ms if p.lt(c[-1], y)]
    return chains


def all_chains(p: Poset, s: Iterable[str] | None = None) -> list[list[tuple[str, ...]]]:
    """Chains grouped by length: index k holds the chains with k+1 elements."""
    out = []
    k = 0
    while True:
        ch = strict_chains(p, s, k)
        if not ch:
            return out
        out.append(ch)
        k += 1
