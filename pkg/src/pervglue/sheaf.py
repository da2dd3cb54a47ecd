"""Sheaves on finite posets as representations of the Hasse diagram."""
from __future__ import annotations

from typing import Mapping

from .linalg import (Matrix, block_diag, hstack, is_invertible, kernel_basis, cokernel_projection,
                     nullspace_sparse, right_inverse, solve_linear, vstack)
from .poset import Poset, PosetError, Subspace


class SheafError(ValueError):
    pass


class Sheaf:
    """Stalk dimension per element and a matrix per covering relation.

    ``rest[(x, y)]`` has shape ``dims[y] x dims[x]``.  Composites along
    longer chains are computed on demand by :meth:`map`.
    """

    def __init__(self, space: Poset, dims: Mapping[str, int], rest: Mapping[tuple[str, str], Matrix] | None = None,
                 *, check: bool = True):
        self.space = space
        self.dims = {x: int(dims.get(x, 0)) for x in space.elements}
        rest = dict(rest or {})
        self.rest = {}
        for x, y in space.covers:
            m = rest.pop((x, y), None)
            if m is None:
                m = Matrix.zeros(self.dims[y], self.dims[x])
            self.rest[(x, y)] = m
        if rest:
            raise SheafError(f"restriction maps on non-covering pairs: {sorted(rest)}")
        self._maps: dict[tuple[str, str], Matrix] = {}
        if check:
            problem = validate_sheaf(self)
            if problem:
                raise SheafError(problem)

    def __repr__(self):
        return f"Sheaf({self.dims})"

    def key(self) -> tuple:
        return (self.space.key(), tuple(self.dims[x] for x in self.space.elements),
                tuple(self.rest[c] for c in self.space.covers))

    def __eq__(self, other):
        return isinstance(other, Sheaf) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def dim(self, x: str) -> int:
        return self.dims[x]

    def total_dim(self) -> int:
        return sum(self.dims.values())

    def is_zero(self) -> bool:
        return not any(self.dims.values())

    def map(self, x: str, y: str) -> Matrix:
        """Restriction F_x -> F_y for x <= y."""
        if x == y:
            return Matrix.identity(self.dims[x])
        m = self._maps.get((x, y))
        if m is None:
            path = self.space.cover_path(x, y)
            m = self.rest[(path[0], path[1])]
            for a, b in zip(path[1:], path[2:]):
                m = self.rest[(a, b)] @ m
            self._maps[(x, y)] = m
        return m


def zero_sheaf(space: Poset) -> Sheaf:
    return Sheaf(space, {}, {}, check=False)


def constant_sheaf(space: Poset, rank: int = 1) -> Sheaf:
    return Sheaf(space, {x: rank for x in space}, {c: Matrix.identity(rank) for c in space.covers}, check=False)


def skyscraper(space: Poset, point: str, rank: int = 1) -> Sheaf:
    return Sheaf(space, {point: rank}, {}, check=False)


def validate_sheaf(F: Sheaf) -> str | None:
    for (x, y), m in F.rest.items():
        if m.shape != (F.dims[y], F.dims[x]):
            return f"restriction {x}<{y} has shape {m.shape}, expected {(F.dims[y], F.dims[x])}"
    for x, y1, y2, z in F.space.diamonds:
        left = F.rest[(y1, z)] @ F.rest[(x, y1)]
        right = F.rest[(y2, z)] @ F.rest[(x, y2)]
        if left != right:
            return f"diamond {x},{{{y1},{y2}}},{z} does not commute: {left} != {right}"
    return None


def is_local_system(F: Sheaf) -> bool:
    return all(is_invertible(m) for m in F.rest.values())


def check_local_system(F: Sheaf) -> Sheaf:
    for c, m in F.rest.items():
        if not is_invertible(m):
            raise SheafError(f"restriction {c[0]}<{c[1]} is not invertible")
    return F


class SheafMorphism:
    """A natural transformation given by one matrix per element."""

    def __init__(self, source: Sheaf, target: Sheaf, comp: Mapping[str, Matrix] | None = None, *, check: bool = True):
        if source.space.elements != target.space.elements:
            raise SheafError("morphism between sheaves on different posets")
        self.source, self.target = source, target
        comp = dict(comp or {})
        self.comp = {}
        for x in source.space.elements:
            m = comp.get(x)
            if m is None:
                m = Matrix.zeros(target.dims[x], source.dims[x])
            self.comp[x] = m
        if check:
            problem = validate_morphism(self)
            if problem:
                raise SheafError(problem)

    def __repr__(self):
        return f"SheafMorphism({self.comp})"

    def __getitem__(self, x):
        return self.comp[x]

    def __matmul__(self, other: "SheafMorphism") -> "SheafMorphism":
        return SheafMorphism(other.source, self.target,
                             {x: self.comp[x] @ other.comp[x] for x in self.comp}, check=False)

    def __add__(self, other):
        return SheafMorphism(self.source, self.target, {x: self.comp[x] + other.comp[x] for x in self.comp}, check=False)

    def __sub__(self, other):
        return SheafMorphism(self.source, self.target, {x: self.comp[x] - other.comp[x] for x in self.comp}, check=False)

    def __neg__(self):
        return SheafMorphism(self.source, self.target, {x: -m for x, m in self.comp.items()}, check=False)

    def scale(self, c):
        return SheafMorphism(self.source, self.target, {x: m.scale(c) for x, m in self.comp.items()}, check=False)

    def equals(self, other: "SheafMorphism") -> bool:
        return all(self.comp[x] == other.comp[x] for x in self.comp)

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.comp.values())

    def is_iso(self) -> bool:
        return all(is_invertible(m) for m in self.comp.values())

    def inverse(self) -> "SheafMorphism":
        from .linalg import inverse
        return SheafMorphism(self.target, self.source, {x: inverse(m) for x, m in self.comp.items()}, check=False)


def identity(F: Sheaf) -> SheafMorphism:
    return SheafMorphism(F, F, {x: Matrix.identity(F.dims[x]) for x in F.space}, check=False)


def zero_morphism(F: Sheaf, G: Sheaf) -> SheafMorphism:
    return SheafMorphism(F, G, {}, check=False)


def validate_morphism(phi: SheafMorphism) -> str | None:
    F, G = phi.source, phi.target
    for x, m in phi.comp.items():
        if m.shape != (G.dims[x], F.dims[x]):
            return f"component at {x} has shape {m.shape}, expected {(G.dims[x], F.dims[x])}"
    for x, y in F.space.covers:
        if G.rest[(x, y)] @ phi.comp[x] != phi.comp[y] @ F.rest[(x, y)]:
            return f"naturality fails on {x}<{y}"
    return None


def hom_basis(F: Sheaf, G: Sheaf) -> list[SheafMorphism]:
    """Basis of the space of sheaf morphisms F -> G."""
    offs, n = {}, 0
    for x in F.space:
        offs[x] = n
        n += G.dims[x] * F.dims[x]

    def var(x, i, j):
        return offs[x] + i * F.dims[x] + j

    eqs = []
    for x, y in F.space.covers:
        gr, fr = G.rest[(x, y)], F.rest[(x, y)]
        for i in range(G.dims[y]):
            for j in range(F.dims[x]):
                eq = {}
                for k in range(G.dims[x]):
                    if gr.row(i)[k]:
                        eq[var(x, k, j)] = eq.get(var(x, k, j), 0) + gr.row(i)[k]
                for k in range(F.dims[y]):
                    if fr.row(k)[j]:
                        eq[var(y, i, k)] = eq.get(var(y, i, k), 0) - fr.row(k)[j]
                eqs.append({a: b for a, b in eq.items() if b})
    return [morphism_from_vector(F, G, v, offs) for v in nullspace_sparse(eqs, n)]


def morphism_from_vector(F: Sheaf, G: Sheaf, vec: Mapping[int, object], offs: Mapping[str, int]) -> SheafMorphism:
    comp = {}
    for x in F.space:
        r, c, o = G.dims[x], F.dims[x], offs[x]
        comp[x] = Matrix.from_rows([[vec.get(o + i * c + j, 0) for j in range(c)] for i in range(r)], cols=c) \
            if r else Matrix.zeros(0, c)
    return SheafMorphism(F, G, comp, check=False)


# ---------------------------------------------------------------------------
# pointwise abelian structure
# ---------------------------------------------------------------------------

def subsheaf_from_columns(F: Sheaf, basis: Mapping[str, Matrix]) -> tuple[Sheaf, SheafMorphism]:
    """Subsheaf spanned stalkwise by the columns of ``basis[x]`` (must be stable)."""
    dims = {x: basis[x].cols for x in F.space}
    rest = {}
    for x, y in F.space.covers:
        m = solve_linear(basis[y], F.rest[(x, y)] @ basis[x])
        if m is None:
            raise SheafError(f"column spaces are not stable under {x}<{y}")
        rest[(x, y)] = m
    K = Sheaf(F.space, dims, rest, check=False)
    return K, SheafMorphism(K, F, dict(basis), check=False)


def quotient_sheaf(F: Sheaf, proj: Mapping[str, Matrix]) -> tuple[Sheaf, SheafMorphism]:
    """Quotient by the stalkwise kernels of full-row-rank ``proj[x]``."""
    dims = {x: proj[x].rows for x in F.space}
    rest = {}
    for x, y in F.space.covers:
        sec = right_inverse(proj[x])
        rest[(x, y)] = proj[y] @ F.rest[(x, y)] @ sec
    Q = Sheaf(F.space, dims, rest, check=False)
    return Q, SheafMorphism(F, Q, dict(proj), check=False)


def kernel(phi: SheafMorphism) -> tuple[Sheaf, SheafMorphism]:
    return subsheaf_from_columns(phi.source, {x: kernel_basis(m) for x, m in phi.comp.items()})


def cokernel(phi: SheafMorphism) -> tuple[Sheaf, SheafMorphism]:
    return quotient_sheaf(phi.target, {x: cokernel_projection(m) for x, m in phi.comp.items()})


def image(phi: SheafMorphism) -> tuple[Sheaf, SheafMorphism]:
    from .linalg import image_basis
    return subsheaf_from_columns(phi.target, {x: image_basis(m) for x, m in phi.comp.items()})


def pointwise_abelian(phi: SheafMorphism):
    """(kernel, mono), (image, mono), (cokernel, epi) of a sheaf morphism."""
    return kernel(phi), image(phi), cokernel(phi)


def factor_through_mono(phi: SheafMorphism, mono: SheafMorphism) -> SheafMorphism | None:
    """psi with mono @ psi == phi, or None."""
    comp = {}
    for x in phi.source.space:
        m = solve_linear(mono.comp[x], phi.comp[x])
        if m is None:
            return None
        comp[x] = m
    return SheafMorphism(phi.source, mono.source, comp, check=False)


def factor_through_epi(phi: SheafMorphism, epi: SheafMorphism) -> SheafMorphism | None:
    """psi with psi @ epi == phi, or None."""
    comp = {}
    for x in phi.source.space:
        t = solve_linear(epi.comp[x].T, phi.comp[x].T)
        if t is None:
            return None
        comp[x] = t.T
    return SheafMorphism(epi.target, phi.target, comp, check=False)


def direct_sum(*sheaves: Sheaf) -> Sheaf:
    space = sheaves[0].space
    return Sheaf(space, {x: sum(F.dims[x] for F in sheaves) for x in space},
                 {c: block_diag([F.rest[c] for F in sheaves]) for c in space.covers}, check=False)


def direct_sum_morphism(*phis: SheafMorphism) -> SheafMorphism:
    src = direct_sum(*(p.source for p in phis))
    tgt = direct_sum(*(p.target for p in phis))
    return SheafMorphism(src, tgt, {x: block_diag([p.comp[x] for p in phis]) for x in src.space}, check=False)


# ---------------------------------------------------------------------------
# restriction, extension by zero, fiber product
# ---------------------------------------------------------------------------

def _members(s) -> tuple[str, ...]:
    return s.members if isinstance(s, Subspace) else tuple(s)


def restrict(F: Sheaf, s) -> Sheaf:
    """Restriction to a subset (open, closed or locally closed)."""
    sub = F.space.sub(_members(s))
    return Sheaf(sub, {x: F.dims[x] for x in sub}, {(x, y): F.map(x, y) for x, y in sub.covers}, check=False)


def restrict_morphism(phi: SheafMorphism, s) -> SheafMorphism:
    members = _members(s)
    return SheafMorphism(restrict(phi.source, members), restrict(phi.target, members),
                         {x: phi.comp[x] for x in members}, check=False)


def _ambient_of(G: Sheaf, ambient: Poset | None) -> Poset:
    if ambient is not None:
        return ambient
    if G.space.parent is None:
        raise SheafError("sheaf does not live on a subposet; pass the ambient poset")
    return G.space.parent


def pushforward_closed(G: Sheaf, Z, ambient: Poset | None = None) -> Sheaf:
    """Extension by zero i_* along a closed inclusion."""
    X = Z.parent if isinstance(Z, Subspace) else _ambient_of(G, ambient)
    members = set(_members(Z))
    if not X.is_down_set(members):
        raise PosetError(f"{sorted(members)} is not closed")
    if set(G.space.elements) != members:
        raise SheafError("sheaf does not live on the closed subspace")
    rest = {}
    for x, y in X.covers:
        if x in members and y in members:
            rest[(x, y)] = G.map(x, y)
    return Sheaf(X, {x: G.dims[x] for x in members}, rest, check=False)


def pushforward_closed_morphism(phi: SheafMorphism, Z, ambient: Poset | None = None) -> SheafMorphism:
    src = pushforward_closed(phi.source, Z, ambient)
    tgt = pushforward_closed(phi.target, Z, ambient)
    return SheafMorphism(src, tgt, {x: phi.comp[x] for x in phi.source.space}, check=False)


def fiber_product(f: SheafMorphism, g: SheafMorphism) -> tuple[Sheaf, SheafMorphism, SheafMorphism]:
    """Pullback of A --f--> C <--g-- B, stalkwise ker [f, -g]."""
    A, B = f.source, g.source
    basis = {}
    for x in A.space:
        basis[x] = kernel_basis(hstack([f.comp[x], -g.comp[x]]))
    AB = direct_sum(A, B)
    P, incl = subsheaf_from_columns(AB, basis)
    pa, pb = {}, {}
    for x in A.space:
        n = A.dims[x]
        k = basis[x]
        pa[x] = k.take_rows(list(range(n)))
        pb[x] = k.take_rows(list(range(n, n + B.dims[x])))
    return P, SheafMorphism(P, A, pa, check=False), SheafMorphism(P, B, pb, check=False)


def pullback_factor(P_incl: tuple[SheafMorphism, SheafMorphism], ta: SheafMorphism, tb: SheafMorphism) -> SheafMorphism | None:
    """Unique map T -> P with p_A t = ta and p_B t = tb (None if it does not exist)."""
    pa, pb = P_incl
    comp = {}
    for x in ta.source.space:
        stacked = vstack([pa.comp[x], pb.comp[x]])
        rhs = vstack([ta.comp[x], tb.comp[x]])
        m = solve_linear(stacked, rhs)
        if m is None:
            return None
        comp[x] = m
    return SheafMorphism(ta.source, pa.source, comp, check=False)
