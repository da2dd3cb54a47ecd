"""Recovering a sheaf from its restrictions to a closed set and its complement.

A gluing triple ``(F_F, F_U, f)`` has ``f: F_F -> i^{-1} j_* F_U`` where
``j_*`` is the plain (degree 0) pushforward: its stalk at ``x`` is the
space of sections of ``F_U`` over ``U ∩ U_x``.  The glued sheaf is the
pullback of ``i_* f`` and the unit ``j_* F_U -> i_* i^{-1} j_* F_U``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .complex import cohomology, induced_map, sheaf_map_as_chain, single
from .derived import adjunction_unit, derived_pushforward_open, pushforward_map
from .linalg import Matrix
from .poset import Poset, Subspace
from .sheaf import (Sheaf, SheafMorphism, fiber_product, pullback_factor, pushforward_closed,
                    pushforward_closed_morphism, restrict, restrict_morphism, validate_morphism)


class GluingError(ValueError):
    pass


def _split(X: Poset, closed) -> tuple[tuple[str, ...], tuple[str, ...]]:
    members = closed.members if isinstance(closed, Subspace) else X.sort(closed)
    if not X.is_down_set(members):
        raise GluingError(f"{list(members)} is not closed")
    return tuple(members), tuple(x for x in X if x not in set(members))


@dataclass
class JStar:
    """Degree-0 pushforward j_* F_U with the data needed to evaluate sections."""
    sheaf: Sheaf
    bar: object
    open_members: tuple

    def evaluation(self, x: str) -> Matrix:
        """(j_* F_U)_x -> F_U,x for x in U: value of a section at x."""
        H = cohomology(self.bar.complex, 0)
        st = self.bar.stalks[x]
        pos, dim = st.offset[0][(x,)] if 0 in st.offset and (x,) in st.offset[0] else (0, 0)
        rows = list(range(pos, pos + dim))
        return H.lift(x).take_rows(rows)


_JSTAR_CACHE: dict = {}


def jstar(X: Poset, U, FU: Sheaf) -> JStar:
    """Memoized: triples and glued sheaves ask for the same j_* many times."""
    members = U.members if isinstance(U, Subspace) else tuple(U)
    key = (X.key(), tuple(members), FU.key())
    out = _JSTAR_CACHE.get(key)
    if out is None:
        bar = derived_pushforward_open(X, members, single(FU, 0))
        out = JStar(cohomology(bar.complex, 0).sheaf, bar, tuple(members))
        _JSTAR_CACHE[key] = out
    return out


def jstar_morphism(phi: SheafMorphism, js: JStar, jt: JStar) -> SheafMorphism:
    m = pushforward_map(sheaf_map_as_chain(phi, 0), js.bar, jt.bar)
    return induced_map(m, 0)


def _unit_to_closed(J: Sheaf, closed: tuple) -> tuple[Sheaf, SheafMorphism]:
    """eta: J -> i_* i^{-1} J."""
    target = pushforward_closed(restrict(J, closed), closed, J.space)
    comp = {x: (Matrix.identity(J.dims[x]) if x in closed else Matrix.zeros(0, J.dims[x])) for x in J.space}
    return target, SheafMorphism(J, target, comp, check=False)


@dataclass
class GluingTriple:
    X: Poset
    closed: tuple
    FF: Sheaf
    FU: Sheaf
    f: SheafMorphism

    def __post_init__(self):
        self.opened = tuple(x for x in self.X if x not in set(self.closed))
        self.js = jstar(self.X, self.opened, self.FU)
        target = restrict(self.js.sheaf, self.closed)
        if self.f.source.key() != self.FF.key() or self.f.target.key() != target.key():
            raise GluingError("glue map must go from F_F to i^{-1} j_* F_U")
        problem = validate_morphism(self.f)
        if problem:
            raise GluingError(problem)


@dataclass
class GluingMorphism:
    source: GluingTriple
    target: GluingTriple
    phi_F: SheafMorphism
    phi_U: SheafMorphism

    def check(self) -> str | None:
        """The compatibility square  i^{-1} j_*(phi_U) f = g phi_F."""
        jphi = restrict_morphism(jstar_morphism(self.phi_U, self.source.js, self.target.js), self.source.closed)
        left = jphi @ self.source.f
        right = self.target.f @ self.phi_F
        for x in self.source.closed:
            if left.comp[x] != right.comp[x]:
                return f"gluing square fails at {x}"
        return None

    def compose(self, other: "GluingMorphism") -> "GluingMorphism":
        """self after other."""
        return GluingMorphism(other.source, self.target, self.phi_F @ other.phi_F, self.phi_U @ other.phi_U)


def restriction_functor_RF(F: Sheaf, closed) -> GluingTriple:
    X = F.space
    K, U = _split(X, closed)
    FF, FU = restrict(F, K), restrict(F, U)
    js = jstar(X, U, FU)
    unit = adjunction_unit(single(F, 0), js.bar)
    eta = restrict_morphism(induced_map(unit, 0), K)
    # source of induced_map is H^0(F[0]) which is F itself up to identical data
    eta = SheafMorphism(FF, restrict(js.sheaf, K), eta.comp, check=False)
    return GluingTriple(X, K, FF, FU, eta)


def restriction_on_morphism(phi: SheafMorphism, closed) -> GluingMorphism:
    K, U = _split(phi.source.space, closed)
    return GluingMorphism(restriction_functor_RF(phi.source, K), restriction_functor_RF(phi.target, K),
                          restrict_morphism(phi, K), restrict_morphism(phi, U))


@dataclass
class Glued:
    """G_F(t) with its projections and the canonical identification over U."""
    triple: GluingTriple
    sheaf: Sheaf
    pA: SheafMorphism   # -> i_* F_F
    pB: SheafMorphism   # -> j_* F_U

    def iso_closed(self) -> SheafMorphism:
        """G_F(t)|_F -> F_F."""
        return SheafMorphism(restrict(self.sheaf, self.triple.closed), self.triple.FF,
                             {x: self.pA.comp[x] for x in self.triple.closed}, check=False)

    def iso_open(self) -> SheafMorphism:
        """G_F(t)|_U -> F_U via evaluation of sections (an isomorphism, not an equality)."""
        t = self.triple
        return SheafMorphism(restrict(self.sheaf, t.opened), t.FU,
                             {x: t.js.evaluation(x) @ self.pB.comp[x] for x in t.opened}, check=False)


def gluing_functor_GF(t: GluingTriple) -> Glued:
    X = t.X
    J = t.js.sheaf
    C, eta = _unit_to_closed(J, t.closed)
    A = pushforward_closed(t.FF, t.closed, X)
    f_ext = pushforward_closed_morphism(SheafMorphism(t.FF, restrict(J, t.closed), t.f.comp, check=False),
                                        t.closed, X)
    f_ext = SheafMorphism(A, C, f_ext.comp, check=False)
    P, pA, pB = fiber_product(f_ext, eta)
    return Glued(t, P, pA, pB)


def gluing_on_morphisms(m: GluingMorphism, gs: Glued | None = None, gt: Glued | None = None) -> SheafMorphism:
    problem = m.check()
    if problem:
        raise GluingError(problem)
    gs = gs or gluing_functor_GF(m.source)
    gt = gt or gluing_functor_GF(m.target)
    X = m.source.X
    phiF = pushforward_closed_morphism(m.phi_F, m.source.closed, X)
    phiF = SheafMorphism(gs.pA.target, gt.pA.target, phiF.comp, check=False)
    phiU = jstar_morphism(m.phi_U, m.source.js, m.target.js)
    out = pullback_factor((gt.pA, gt.pB), phiF @ gs.pA, phiU @ gs.pB)
    if out is None:
        raise GluingError("no induced map between glued sheaves")
    return SheafMorphism(gs.sheaf, gt.sheaf, out.comp, check=False)


@dataclass
class Witnesses:
    iso1: SheafMorphism       # G_F R_F(F) -> F
    iso2: GluingMorphism      # R_F G_F(t) -> t


def counit_iso(F: Sheaf, closed) -> tuple[Glued, SheafMorphism]:
    """G_F R_F(F) -> F, the projection to F_F over F and evaluation over U."""
    t = restriction_functor_RF(F, closed)
    g = gluing_functor_GF(t)
    comp = {}
    for x in F.space:
        if x in t.closed:
            comp[x] = g.pA.comp[x]
        else:
            comp[x] = t.js.evaluation(x) @ g.pB.comp[x]
    return g, SheafMorphism(g.sheaf, F, comp, check=False)


def unit_iso(t: GluingTriple, g: Glued | None = None) -> GluingMorphism:
    """R_F G_F(t) -> t."""
    g = g or gluing_functor_GF(t)
    rt = restriction_functor_RF(g.sheaf, t.closed)
    return GluingMorphism(rt, t, SheafMorphism(rt.FF, t.FF, g.iso_closed().comp, check=False),
                          SheafMorphism(rt.FU, t.FU, g.iso_open().comp, check=False))


def quasi_inverse_witnesses(F: Sheaf, t: GluingTriple) -> Witnesses:
    _, iso1 = counit_iso(F, t.closed)
    iso2 = unit_iso(t)
    for name, phi in (("iso1", iso1), ("iso2.F", iso2.phi_F), ("iso2.U", iso2.phi_U)):
        problem = validate_morphism(phi)
        if problem:
            raise GluingError(f"{name} is not natural: {problem}")
        if not phi.is_iso():
            raise GluingError(f"{name} is not invertible")
    problem = iso2.check()
    if problem:
        raise GluingError(problem)
    return Witnesses(iso1, iso2)


# ---------------------------------------------------------------------------
# random triples and triple morphisms
# ---------------------------------------------------------------------------

def _random_combination(basis: list[SheafMorphism], zero: SheafMorphism, rng) -> SheafMorphism:
    out = zero
    for m in basis:
        c = rng.randint(-2, 2)
        if c:
            out = out + m.scale(c)
    return out


def random_triple(X: Poset, closed, rng, max_rank: int = 3, FF: Sheaf | None = None,
                  FU: Sheaf | None = None) -> GluingTriple:
    """Locally constant pieces on each part and a random glue map."""
    from .perverse import random_local_system, trivial_local_system
    from .sheaf import hom_basis, zero_morphism
    K, U = _split(X, closed)
    pieces = []
    for part, given in ((K, FF), (U, FU)):
        if given is None:
            P = X.sub(part)
            r = rng.randint(0, max_rank)
            given = (random_local_system(P, r, rng) if rng.random() < 0.5 else None) or trivial_local_system(P, r)
        pieces.append(given)
    FF, FU = pieces
    target = restrict(jstar(X, U, FU).sheaf, K)
    f = _random_combination(hom_basis(FF, target), zero_morphism(FF, target), rng)
    return GluingTriple(X, K, FF, FU, f)


def triple_hom_basis(t: GluingTriple, t2: GluingTriple) -> list[GluingMorphism]:
    """Basis of the space of morphisms of gluing triples t -> t2."""
    from .linalg import affine_solutions
    from .sheaf import hom_basis
    bF, bU = hom_basis(t.FF, t2.FF), hom_basis(t.FU, t2.FU)
    jU = [restrict_morphism(jstar_morphism(m, t.js, t2.js), t.closed) for m in bU]
    nF = len(bF)

    def residual(vec):
        out = []
        for x in t.closed:
            acc = Matrix.zeros(t2.f.target.dims[x], t.FF.dims[x])
            for i, m in enumerate(bF):
                if vec.get(i):
                    acc = acc - (t2.f.comp[x] @ m.comp[x]).scale(vec[i])
            for i, m in enumerate(jU):
                if vec.get(nF + i):
                    acc = acc + (m.comp[x] @ t.f.comp[x]).scale(vec[nF + i])
            out += [v for r in range(acc.rows) for v in acc.row(r)]
        return out

    _, basis = affine_solutions(residual, nF + len(bU))
    from .sheaf import zero_morphism
    out = []
    for vec in basis:
        phiF, phiU = zero_morphism(t.FF, t2.FF), zero_morphism(t.FU, t2.FU)
        for i, m in enumerate(bF):
            if vec.get(i):
                phiF = phiF + m.scale(vec[i])
        for i, m in enumerate(bU):
            if vec.get(nF + i):
                phiU = phiU + m.scale(vec[nF + i])
        out.append(GluingMorphism(t, t2, phiF, phiU))
    return out


def random_triple_morphism(t: GluingTriple, t2: GluingTriple, rng) -> GluingMorphism:
    from .sheaf import zero_morphism
    out = GluingMorphism(t, t2, zero_morphism(t.FF, t2.FF), zero_morphism(t.FU, t2.FU))
    for m in triple_hom_basis(t, t2):
        c = rng.randint(-2, 2)
        if c:
            out = GluingMorphism(t, t2, out.phi_F + m.phi_F.scale(c), out.phi_U + m.phi_U.scale(c))
    return out


def check_naturality(m: GluingMorphism) -> str | None:
    """Naturality of both round-trip isomorphisms along m and along G_F(m)."""
    gs, gt = gluing_functor_GF(m.source), gluing_functor_GF(m.target)
    Gm = gluing_on_morphisms(m, gs, gt)
    u1, u2 = unit_iso(m.source, gs), unit_iso(m.target, gt)
    RGm = restriction_on_morphism(Gm, m.source.closed)
    for name, left, right in (("closed part", m.phi_F @ u1.phi_F, u2.phi_F @ RGm.phi_F),
                              ("open part", m.phi_U @ u1.phi_U, u2.phi_U @ RGm.phi_U)):
        if not left.equals(right):
            return f"R_F G_F -> id is not natural on the {name}"
    _, c1 = counit_iso(gs.sheaf, m.source.closed)
    _, c2 = counit_iso(gt.sheaf, m.source.closed)
    GRGm = gluing_on_morphisms(restriction_on_morphism(Gm, m.source.closed))
    if not (Gm @ c1).equals(c2 @ GRGm):
        return "G_F R_F -> id is not natural"
    return None
