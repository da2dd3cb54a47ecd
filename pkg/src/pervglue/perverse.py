"""Two-strata stratified posets, the perversity test and perverse closed sets.

A stratified space is a closed stratum ``S`` (attached dimension ``d``) and
its open complement ``X0``, on which perverse objects are local systems
placed in degree ``-c``.  For a closed ``K ⊇ S`` with open complement ``L``
the functors

    F(A) = H^{-d-1}(RΓ_L Rj_* A)|_S        G(A) = H^{-d}(RΓ_K Rj_* A)|_S

are linked by ``T_A``, the connecting map of the local-cohomology triangle.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .complex import SheafComplex, cohomology_dims, cohomology_sheaf, induced_map, sheaf_map_as_chain, single
from .derived import (BarComplex, GammaClosed, derived_pushforward_open, gamma_closed, gamma_closed_map,
                      gamma_open_map, pushforward_map)
from .linalg import Matrix, is_invertible
from .poset import Poset, Subspace
from .sheaf import Sheaf, SheafMorphism, is_local_system, restrict, restrict_morphism, validate_sheaf


class PerverseError(ValueError):
    pass


class ModelError(RuntimeError):
    """A construction left the class of objects it should stay in (usually a bad K)."""


def _members(s) -> tuple[str, ...]:
    return s.members if isinstance(s, Subspace) else tuple(s)


class StratifiedSpace:
    def __init__(self, space: Poset, S, X0=None, d: int = 0, c: int = 1):
        S = space.sort(_members(S))
        X0 = space.sort(_members(X0)) if X0 is not None else tuple(x for x in space if x not in set(S))
        if set(S) & set(X0) or set(S) | set(X0) != set(space.elements):
            raise PerverseError("S and X0 must partition the space")
        if not S:
            raise PerverseError("S is empty")
        if not space.is_down_set(S):
            raise PerverseError(f"S = {list(S)} is not closed")
        if not space.is_connected(S):
            raise PerverseError("S must be connected")
        if int(c) < 1:
            raise PerverseError("c must be a positive integer")
        self.space, self.S, self.X0, self.d, self.c = space, S, X0, int(d), int(c)

    def __repr__(self):
        return f"StratifiedSpace(S={list(self.S)}, X0={list(self.X0)}, d={self.d}, c={self.c})"

    @property
    def X0_poset(self) -> Poset:
        return self.space.sub(self.X0)

    @property
    def S_poset(self) -> Poset:
        return self.space.sub(self.S)

    def complement(self, K) -> tuple[str, ...]:
        K = set(_members(K))
        return tuple(x for x in self.space if x not in K)


@dataclass
class PerverseOnX0:
    """A local system on X0, viewed as the complex ls[c]."""
    ls: Sheaf
    c: int = 1
    label: str = ""

    def __post_init__(self):
        problem = validate_sheaf(self.ls)
        if problem:
            raise PerverseError(problem)
        if not is_local_system(self.ls):
            raise PerverseError(f"{self.label or 'object'} is not a local system")

    @property
    def rank(self) -> int:
        return max(self.ls.dims.values(), default=0)

    def complex(self) -> SheafComplex:
        return single(self.ls, -self.c)


_RJ_CACHE: dict = {}


def pushforward(X: StratifiedSpace, A: PerverseOnX0) -> BarComplex:
    """Rj_*(A[c]) as a bar complex on the whole space (memoized)."""
    key = (X.space.key(), X.X0, A.ls.key(), A.c)
    bar = _RJ_CACHE.get(key)
    if bar is None:
        bar = derived_pushforward_open(X.space, X.X0, A.complex())
        _RJ_CACHE[key] = bar
    return bar


# ---------------------------------------------------------------------------
# perversity
# ---------------------------------------------------------------------------

@dataclass
class PerversityReport:
    verdict: bool
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.verdict


def _locally_constant_on(H: Sheaf, members) -> bool:
    members = set(members)
    return all(is_invertible(m) for (x, y), m in H.rest.items() if x in members and y in members)


def check_constructible(X: StratifiedSpace, C: SheafComplex) -> str | None:
    for k in C.degrees:
        H = cohomology_sheaf(C, k)
        for name, part in (("S", X.S), ("X0", X.X0)):
            if not _locally_constant_on(H, part):
                return f"H^{k} is not locally constant on {name}"
    return None


def is_perverse(X: StratifiedSpace, C: SheafComplex) -> PerversityReport:
    if C.space != X.space:
        raise PerverseError("complex lives on a different space")
    problem = check_constructible(X, C)
    if problem:
        raise PerverseError(problem)
    fails = []
    for x in X.X0:
        for k, n in cohomology_dims(C, x).items():
            if k != -X.c:
                fails.append(("restriction to X0", k, x, n))
    for x in X.S:
        for k, n in cohomology_dims(C, x).items():
            if k > -X.d:
                fails.append(("restriction to S", k, x, n))
    gs = gamma_closed(X.S, C).cone.cone
    for x in X.S:
        for k, n in cohomology_dims(gs, x).items():
            if k + 1 < -X.d:
                fails.append(("sections supported on S", k + 1, x, n))
    return PerversityReport(not fails, fails)


# ---------------------------------------------------------------------------
# perverse closed sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    label: str
    degree: int | None
    functor: str
    dims: tuple


@dataclass
class PerverseClosedReport:
    candidate: tuple
    verdict: bool
    witnesses: list
    tests: list

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        return {"candidate": list(self.candidate), "verdict": "pass" if self.verdict else "fail",
                "tests": [t.label for t in self.tests],
                "witnesses": [{"test": w.label, "degree": w.degree, "functor": w.functor,
                               "dims": dict(w.dims)} for w in self.witnesses]}


def _degree_dims(C: SheafComplex, shift: int = 0) -> dict[int, dict[str, int]]:
    out: dict[int, dict[str, int]] = {}
    for x in C.space:
        for k, n in cohomology_dims(C, x).items():
            out.setdefault(k + shift, {})[x] = n
    return out


def is_perverse_closed(X: StratifiedSpace, K, tests: list[PerverseOnX0]) -> PerverseClosedReport:
    K = X.space.sort(_members(K))
    if not X.space.is_down_set(K):
        raise PerverseError(f"{list(K)} is not closed")
    if not tests:
        raise PerverseError("empty test family")
    missing = [s for s in X.S if s not in set(K)]
    if missing:
        w = Witness("S not contained in K", None, "prefilter", tuple((s, 1) for s in missing))
        return PerverseClosedReport(K, False, [w], list(tests))
    witnesses = []
    for A in tests:
        gc = gamma_closed(K, pushforward(X, A).complex)
        # H^k(RΓ_K) = H^{k-1}(cone(rho))
        for k, dims in sorted(_degree_dims(gc.cone.cone, shift=1).items()):
            if k < -X.d:
                witnesses.append(Witness(A.label, k, "RΓ_K", tuple(dims.items())))
        for k, dims in sorted(_degree_dims(gc.gamma_l).items()):
            if k >= -X.d:
                witnesses.append(Witness(A.label, k, "RΓ_L", tuple(dims.items())))
    return PerverseClosedReport(K, not witnesses, witnesses, list(tests))


# ---------------------------------------------------------------------------
# test families
# ---------------------------------------------------------------------------

_SCALARS = (Fraction(-1), Fraction(2), Fraction(3), Fraction(1, 2), Fraction(-2))


def _spanning_tree(P: Poset) -> set[tuple[str, str]]:
    seen, tree = set(), set()
    adj: dict[str, list[tuple[str, str]]] = {x: [] for x in P}
    for x, y in P.covers:
        adj[x].append((x, y))
        adj[y].append((x, y))
    for root in P:
        if root in seen:
            continue
        seen.add(root)
        stack = [root]
        while stack:
            v = stack.pop()
            for e in adj[v]:
                w = e[1] if e[0] == v else e[0]
                if w not in seen:
                    seen.add(w)
                    tree.add(e)
                    stack.append(w)
    return tree


def _random_invertible(rng: random.Random, n: int) -> Matrix:
    if n == 0:
        raise PerverseError("no non-trivial invertible 0x0 matrix")
    if n == 1:
        return Matrix.from_rows([[rng.choice(_SCALARS)]])
    while True:
        m = Matrix.from_rows([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])
        if is_invertible(m) and m != Matrix.identity(n):
            return m


def random_local_system(P: Poset, rank: int, rng: random.Random, attempts: int = 20) -> Sheaf | None:
    """Identity on a spanning tree of the cover graph, random invertible matrices elsewhere.

    Returns None when no attempt satisfies the diamond relations (or the
    cover graph is a forest or rank is 0, so every local system is trivial).
    """
    tree = _spanning_tree(P)
    free = [e for e in P.covers if e not in tree]
    if not free or rank == 0:
        return None
    for _ in range(attempts):
        rest = {e: Matrix.identity(rank) for e in tree}
        for e in free:
            rest[e] = _random_invertible(rng, rank)
        F = Sheaf(P, {x: rank for x in P}, rest, check=False)
        if validate_sheaf(F) is None:
            return F
    return None


def trivial_local_system(P: Poset, rank: int) -> Sheaf:
    return Sheaf(P, {x: rank for x in P}, {e: Matrix.identity(rank) for e in P.covers}, check=False)


def default_test_family(X: StratifiedSpace, max_rank: int = 2, seed: int = 0,
                        per_rank: int = 2) -> list[PerverseOnX0]:
    """Trivial local systems of every rank up to max_rank plus seeded random holonomies.

    A passing verdict over this family means no counterexample was found.
    """
    if max_rank < 1:
        raise PerverseError("max_rank must be at least 1")
    rng = random.Random(seed)
    P = X.X0_poset
    out = [PerverseOnX0(trivial_local_system(P, r), X.c, f"trivial rank {r}") for r in range(1, max_rank + 1)]
    for r in range(1, max_rank + 1):
        for i in range(per_rank):
            F = random_local_system(P, r, rng)
            if F is not None:
                out.append(PerverseOnX0(F, X.c, f"random rank {r} #{i}"))
    return out


# ---------------------------------------------------------------------------
# the functors F, G and the transformation T
# ---------------------------------------------------------------------------

@dataclass
class FGT:
    X: StratifiedSpace
    K: tuple
    A: PerverseOnX0
    bar: BarComplex
    gc: GammaClosed
    FA: Sheaf
    GA: Sheaf
    T: SheafMorphism


def _on_S(X: StratifiedSpace, H: Sheaf, what: str) -> Sheaf:
    out = restrict(H, X.S)
    if not is_local_system(out):
        raise ModelError(f"{what} is not locally constant on S")
    return out


def functor_F_G_T(X: StratifiedSpace, K, A: PerverseOnX0) -> FGT:
    K = X.space.sort(_members(K))
    bar = pushforward(X, A)
    gc = gamma_closed(K, bar.complex)
    k = -X.d - 1
    # H^{-d}(RΓ_K) is read off as H^{-d-1}(cone(rho)), same basis
    FA = _on_S(X, cohomology_sheaf(gc.gamma_l, k), "F(A)")
    GA = _on_S(X, cohomology_sheaf(gc.cone.cone, k), "G(A)")
    T = restrict_morphism(induced_map(gc.delta, k), X.S)
    return FGT(X, K, A, bar, gc, FA, GA, SheafMorphism(FA, GA, T.comp, check=False))


def functor_F_G_on_morphism(a: SheafMorphism, src: FGT, tgt: FGT) -> tuple[SheafMorphism, SheafMorphism]:
    """(F(a), G(a)) for a morphism a: A -> A' of local systems on X0."""
    X = src.X
    ya = pushforward_map(sheaf_map_as_chain(a, -src.A.c), src.bar, tgt.bar)
    k = -X.d - 1
    Fa = restrict_morphism(induced_map(gamma_open_map(ya, src.gc.gopen, tgt.gc.gopen), k), X.S)
    Ga = restrict_morphism(induced_map(gamma_closed_map(ya, src.gc, tgt.gc), k), X.S)
    return (SheafMorphism(src.FA, tgt.FA, Fa.comp, check=False),
            SheafMorphism(src.GA, tgt.GA, Ga.comp, check=False))


# ---------------------------------------------------------------------------
# standard perverse complexes on a stratified space
# ---------------------------------------------------------------------------

def pushforward_complex(X: StratifiedSpace, ls: Sheaf) -> SheafComplex:
    """Rj_*(ls[c])."""
    return pushforward(X, PerverseOnX0(ls, X.c)).complex


def intermediate_extension(X: StratifiedSpace, ls: Sheaf) -> SheafComplex:
    """τ^{<=-d-1} Rj_*(ls[c])."""
    from .complex import truncate_le
    return truncate_le(pushforward_complex(X, ls), -X.d - 1).complex


def extension_by_zero(X: StratifiedSpace, ls: Sheaf) -> SheafComplex:
    """j_!(ls[c]): zero stalks on S."""
    P = X.space
    dims = {x: (ls.dims[x] if x in set(X.X0) else 0) for x in P}
    rest = {(x, y): ls.rest[(x, y)] for x, y in ls.space.covers}
    F = Sheaf(P, dims, rest, check=False)
    return single(F, -X.c)


def constant_on_S(X: StratifiedSpace, rank: int = 1) -> SheafComplex:
    """The constant sheaf of S, extended by zero, in degree -d."""
    P = X.space
    dims = {x: (rank if x in set(X.S) else 0) for x in P}
    rest = {(x, y): Matrix.identity(rank) for x, y in P.covers if x in set(X.S) and y in set(X.S)}
    return single(Sheaf(P, dims, rest, check=False), -X.d)
