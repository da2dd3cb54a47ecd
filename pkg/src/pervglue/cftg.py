"""The category of quadruples (A, B, u, v) with v u = T_A.

Here ``A`` is a local system on X0 (the perverse object A[c]), ``B`` a local
system on S, ``u: F(A) -> B`` and ``v: B -> G(A)``.  Kernels and cokernels
are computed componentwise; the structure maps are obtained by factoring
through ``F(incl)``, ``G(incl)``, ``F(proj)``, ``G(proj)``, and every
construction is checked against its universal property rather than trusted.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .linalg import Matrix, affine_solutions
from .perverse import (FGT, ModelError, PerverseOnX0, StratifiedSpace, default_test_family, functor_F_G_on_morphism,
                       functor_F_G_T, is_perverse_closed, random_local_system, trivial_local_system)
from .sheaf import (Sheaf, SheafMorphism, cokernel as sheaf_cokernel, factor_through_epi, factor_through_mono,
                    hom_basis, identity, is_local_system, kernel as sheaf_kernel, validate_morphism, zero_morphism)


class CftgError(ValueError):
    pass


def _flat(m: Matrix) -> list:
    return [v for i in range(m.rows) for v in m.row(i)]


class CftgContext:
    """A stratified space with a fixed perverse closed set K and cached F, G, T."""

    def __init__(self, X: StratifiedSpace, K, tests: list[PerverseOnX0] | None = None, *, require: bool = True):
        self.X = X
        self.K = X.space.sort(K.members if hasattr(K, "members") else K)
        self.L = X.complement(self.K)
        self.tests = list(tests) if tests else default_test_family(X, 2, 0)
        self.report = is_perverse_closed(X, self.K, self.tests)
        if require and not self.report.verdict:
            raise ModelError(f"{list(self.K)} is not a perverse closed set: {self.report.witnesses[:3]}")
        self._fgt: dict = {}

    def fgt(self, A: PerverseOnX0) -> FGT:
        key = (A.ls.key(), A.c)
        out = self._fgt.get(key)
        if out is None:
            out = functor_F_G_T(self.X, self.K, A)
            self._fgt[key] = out
        return out

    def F(self, A: PerverseOnX0) -> Sheaf:
        return self.fgt(A).FA

    def G(self, A: PerverseOnX0) -> Sheaf:
        return self.fgt(A).GA

    def T(self, A: PerverseOnX0) -> SheafMorphism:
        return self.fgt(A).T

    def FG(self, a: SheafMorphism, A: PerverseOnX0, A2: PerverseOnX0) -> tuple[SheafMorphism, SheafMorphism]:
        return functor_F_G_on_morphism(a, self.fgt(A), self.fgt(A2))

    def perverse(self, ls: Sheaf, label: str = "") -> PerverseOnX0:
        return PerverseOnX0(ls, self.X.c, label)


@dataclass
class CftgObject:
    A: PerverseOnX0
    B: Sheaf
    u: SheafMorphism
    v: SheafMorphism


@dataclass
class CftgMorphism:
    source: CftgObject
    target: CftgObject
    a: SheafMorphism
    b: SheafMorphism

    def __matmul__(self, other: "CftgMorphism") -> "CftgMorphism":
        return CftgMorphism(other.source, self.target, self.a @ other.a, self.b @ other.b)

    def is_iso(self) -> bool:
        return self.a.is_iso() and self.b.is_iso()

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def equals(self, other: "CftgMorphism") -> bool:
        return self.a.equals(other.a) and self.b.equals(other.b)


def validate_object(ctx: CftgContext, o: CftgObject) -> str | None:
    S = ctx.X.S_poset
    if o.B.space != S:
        return "B must be a sheaf on S"
    if not is_local_system(o.B):
        return "B is not a local system"
    FA, GA, T = ctx.F(o.A), ctx.G(o.A), ctx.T(o.A)
    for name, phi, src, tgt in (("u", o.u, FA, o.B), ("v", o.v, o.B, GA)):
        if phi.source.dims != src.dims or phi.target.dims != tgt.dims:
            return f"{name} has the wrong source or target"
        problem = validate_morphism(phi)
        if problem:
            return f"{name}: {problem}"
    for s in S:
        vu = o.v.comp[s] @ o.u.comp[s]
        if vu != T.comp[s]:
            return f"v u != T at {s}: {vu} vs {T.comp[s]}"
    return None


def check_object(ctx: CftgContext, o: CftgObject) -> CftgObject:
    problem = validate_object(ctx, o)
    if problem:
        raise CftgError(problem)
    return o


def validate_cftg_morphism(ctx: CftgContext, m: CftgMorphism) -> str | None:
    for name, phi in (("a", m.a), ("b", m.b)):
        problem = validate_morphism(phi)
        if problem:
            return f"{name}: {problem}"
    Fa, Ga = ctx.FG(m.a, m.source.A, m.target.A)
    for s in ctx.X.S:
        if m.b.comp[s] @ m.source.u.comp[s] != m.target.u.comp[s] @ Fa.comp[s]:
            return f"b u != u' F(a) at {s}"
        if m.target.v.comp[s] @ m.b.comp[s] != Ga.comp[s] @ m.source.v.comp[s]:
            return f"v' b != G(a) v at {s}"
    return None


def check_cftg_morphism(ctx: CftgContext, m: CftgMorphism) -> CftgMorphism:
    problem = validate_cftg_morphism(ctx, m)
    if problem:
        raise CftgError(problem)
    return m


# ---------------------------------------------------------------------------
# basic objects and morphisms
# ---------------------------------------------------------------------------

def object_from_F(ctx: CftgContext, A: PerverseOnX0) -> CftgObject:
    """(A, F(A), id, T_A)."""
    FA = ctx.F(A)
    return CftgObject(A, FA, identity(FA), ctx.T(A))


def object_from_G(ctx: CftgContext, A: PerverseOnX0) -> CftgObject:
    """(A, G(A), T_A, id)."""
    GA = ctx.G(A)
    return CftgObject(A, GA, ctx.T(A), identity(GA))


def zero_object(ctx: CftgContext) -> CftgObject:
    A = ctx.perverse(trivial_local_system(ctx.X.X0_poset, 0), "0")
    B = trivial_local_system(ctx.X.S_poset, 0)
    return CftgObject(A, B, zero_morphism(ctx.F(A), B), zero_morphism(B, ctx.G(A)))


def identity_morphism(o: CftgObject) -> CftgMorphism:
    return CftgMorphism(o, o, identity(o.A.ls), identity(o.B))


def zero_cftg_morphism(o: CftgObject, o2: CftgObject) -> CftgMorphism:
    return CftgMorphism(o, o2, zero_morphism(o.A.ls, o2.A.ls), zero_morphism(o.B, o2.B))


def hom_space(ctx: CftgContext, o: CftgObject, o2: CftgObject, constraint=None) -> list[CftgMorphism]:
    """Basis of Hom(o, o2), optionally cut down by a linear ``constraint(a, b) -> list``."""
    a_basis = hom_basis(o.A.ls, o2.A.ls)
    fg = [ctx.FG(a, o.A, o2.A) for a in a_basis]
    S = ctx.X.S_poset
    offs, n = {}, len(a_basis)
    for s in S:
        offs[s] = n
        n += o2.B.dims[s] * o.B.dims[s]
    from .sheaf import morphism_from_vector

    def build(vec):
        a = zero_morphism(o.A.ls, o2.A.ls)
        Fa, Ga = zero_morphism(ctx.F(o.A), ctx.F(o2.A)), zero_morphism(ctx.G(o.A), ctx.G(o2.A))
        for i, ai in enumerate(a_basis):
            c = vec.get(i, 0)
            if c:
                a = a + ai.scale(c)
                Fa = Fa + fg[i][0].scale(c)
                Ga = Ga + fg[i][1].scale(c)
        b = morphism_from_vector(o.B, o2.B, vec, offs)
        return a, Fa, Ga, b

    def residual(vec):
        a, Fa, Ga, b = build(vec)
        out = []
        for x, y in S.covers:
            out += _flat(o2.B.rest[(x, y)] @ b.comp[x] - b.comp[y] @ o.B.rest[(x, y)])
        for s in S:
            out += _flat(b.comp[s] @ o.u.comp[s] - o2.u.comp[s] @ Fa.comp[s])
            out += _flat(o2.v.comp[s] @ b.comp[s] - Ga.comp[s] @ o.v.comp[s])
        if constraint is not None:
            out += constraint(a, b)
        return out

    _, basis = affine_solutions(residual, n)
    out = []
    for vec in basis:
        a, _, _, b = build(vec)
        out.append(CftgMorphism(o, o2, a, b))
    return out


def random_combination(basis: list, rng: random.Random, zero):
    out = zero
    for m in basis:
        c = rng.randint(-2, 2)
        if c:
            out = CftgMorphism(out.source, out.target, out.a + m.a.scale(c), out.b + m.b.scale(c))
    return out


def random_morphism(ctx: CftgContext, o: CftgObject, o2: CftgObject, rng: random.Random,
                    constraint=None) -> CftgMorphism:
    return random_combination(hom_space(ctx, o, o2, constraint), rng, zero_cftg_morphism(o, o2))


def random_object(ctx: CftgContext, rng: random.Random, A: PerverseOnX0 | None = None,
                  rank_B: int | None = None, attempts: int = 10) -> CftgObject:
    """Random B and u, then v solved from v u = T_A (falls back to (A, F(A), id, T))."""
    A = A or rng.choice(ctx.tests)
    FA, GA, T = ctx.F(A), ctx.G(A), ctx.T(A)
    S = ctx.X.S_poset
    for _ in range(attempts):
        r = rank_B if rank_B is not None else rng.randint(0, 3)
        B = random_local_system(S, r, rng) if rng.random() < 0.5 else None
        B = B or trivial_local_system(S, r)
        u = _random_sheaf_map(FA, B, rng)
        vb = hom_basis(B, GA)

        def residual(vec, u=u, vb=vb):
            out = []
            for s in S:
                vs = Matrix.zeros(GA.dims[s], B.dims[s])
                for i, m in enumerate(vb):
                    if vec.get(i):
                        vs = vs + m.comp[s].scale(vec[i])
                out += _flat(vs @ u.comp[s] - T.comp[s])
            return out

        part, kern = affine_solutions(residual, len(vb))
        if part is None:
            continue
        coeffs = dict(part)
        for k in kern:
            c = rng.randint(-2, 2)
            for i, x in k.items():
                coeffs[i] = coeffs.get(i, 0) + c * x
        v = zero_morphism(B, GA)
        for i, m in enumerate(vb):
            if coeffs.get(i):
                v = v + m.scale(coeffs[i])
        return CftgObject(A, B, u, v)
    return object_from_F(ctx, A)


def _random_sheaf_map(F: Sheaf, G: Sheaf, rng: random.Random) -> SheafMorphism:
    out = zero_morphism(F, G)
    for m in hom_basis(F, G):
        c = rng.randint(-2, 2)
        if c:
            out = out + m.scale(c)
    return out


# ---------------------------------------------------------------------------
# kernels, cokernels, image and coimage
# ---------------------------------------------------------------------------

@dataclass
class Kernel:
    object: CftgObject
    mono: CftgMorphism


@dataclass
class Cokernel:
    object: CftgObject
    epi: CftgMorphism


def kernel(ctx: CftgContext, m: CftgMorphism) -> Kernel:
    o = m.source
    Ka, ia = sheaf_kernel(m.a)
    Kb, ib = sheaf_kernel(m.b)
    Ak = ctx.perverse(Ka, f"ker({o.A.label})")
    Fi, Gi = ctx.FG(ia, Ak, o.A)
    u0 = factor_through_mono(o.u @ Fi, ib)
    if u0 is None:
        raise ModelError("u F(incl) does not land in ker b")
    v0 = factor_through_mono(o.v @ ib, Gi)
    if v0 is None:
        raise ModelError("v on ker b does not factor through G(ker a): G is not left exact here")
    obj = CftgObject(Ak, Kb, SheafMorphism(ctx.F(Ak), Kb, u0.comp, check=False),
                     SheafMorphism(Kb, ctx.G(Ak), v0.comp, check=False))
    return Kernel(obj, CftgMorphism(obj, o, ia, ib))


def cokernel(ctx: CftgContext, m: CftgMorphism) -> Cokernel:
    o = m.target
    Ca, pa = sheaf_cokernel(m.a)
    Cb, pb = sheaf_cokernel(m.b)
    Ac = ctx.perverse(Ca, f"coker({o.A.label})")
    Fp, Gp = ctx.FG(pa, o.A, Ac)
    u1 = factor_through_epi(pb @ o.u, Fp)
    if u1 is None:
        raise ModelError("u' does not descend along F(proj): F is not right exact here")
    v1 = factor_through_epi(Gp @ o.v, pb)
    if v1 is None:
        raise ModelError("G(proj) v' does not vanish on the image of b")
    obj = CftgObject(Ac, Cb, SheafMorphism(ctx.F(Ac), Cb, u1.comp, check=False),
                     SheafMorphism(Cb, ctx.G(Ac), v1.comp, check=False))
    return Cokernel(obj, CftgMorphism(o, obj, pa, pb))


def kernel_lift(ctx: CftgContext, k: Kernel, g: CftgMorphism) -> CftgMorphism | None:
    """The unique h with mono h = g, or None if g does not factor."""
    a = factor_through_mono(g.a, k.mono.a)
    b = factor_through_mono(g.b, k.mono.b)
    if a is None or b is None:
        return None
    h = CftgMorphism(g.source, k.object, SheafMorphism(g.source.A.ls, k.object.A.ls, a.comp, check=False),
                     SheafMorphism(g.source.B, k.object.B, b.comp, check=False))
    return h if validate_cftg_morphism(ctx, h) is None else None


def cokernel_descend(ctx: CftgContext, c: Cokernel, g: CftgMorphism) -> CftgMorphism | None:
    """The unique h with h epi = g, or None."""
    a = factor_through_epi(g.a, c.epi.a)
    b = factor_through_epi(g.b, c.epi.b)
    if a is None or b is None:
        return None
    h = CftgMorphism(c.object, g.target, SheafMorphism(c.object.A.ls, g.target.A.ls, a.comp, check=False),
                     SheafMorphism(c.object.B, g.target.B, b.comp, check=False))
    return h if validate_cftg_morphism(ctx, h) is None else None


@dataclass
class ImageCoimage:
    coimage: Cokernel      # coker(ker m -> source)
    image: Kernel          # ker(target -> coker m)
    comparison: CftgMorphism | None
    is_iso: bool


def image_coimage_compare(ctx: CftgContext, m: CftgMorphism) -> ImageCoimage:
    k = kernel(ctx, m)
    coim = cokernel(ctx, k.mono)
    c = cokernel(ctx, m)
    im = kernel(ctx, c.epi)
    through_im = kernel_lift(ctx, im, m)
    phi = cokernel_descend(ctx, coim, through_im) if through_im is not None else None
    return ImageCoimage(coim, im, phi, phi is not None and phi.is_iso())


def object_is_zero(o: CftgObject) -> bool:
    return o.A.ls.is_zero() and o.B.is_zero()
