"""The functors C (perverse complexes -> quadruples) and P (quadruples -> complexes).

P is realised on the nose: for a quadruple (A, L, u, v) with Y = Rj_*(A[c]),
the complex E has the truncation of RΓ_L Y in degrees <= -d-1 and a glued
sheaf B in degree -d, with differential phi composed with the projection
onto H^{-d-1}.  B is glued over S from L and the X0 part of H^{-d}(RΓ_K Y);
phi is glued from u and the connecting map.

Everything here is phrased through a ``Datum``: a complex Y on X with its
local cohomology plus (L, u, v).  Maps of data give strict maps of the
corresponding cones, which is how the round trips are witnessed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .cftg import CftgContext, CftgMorphism, CftgObject, validate_cftg_morphism, validate_object
from .complex import (ChainMap, Cone, FillIn, SheafComplex, are_homotopic, cohomology_projection, cohomology_sheaf,
                      cone, cone_map, fill_in, identity_map, sheaf_map_as_chain, induced_map, is_quasi_iso, shift, shift_map, single,
                      truncate_le, truncate_le_map, validate_chain_map, validate_complex, Truncation)
from .derived import (GammaClosed, adjunction_unit, derived_pushforward_open, gamma_closed, gamma_closed_map,
                      gamma_open_map, pushforward_map, restrict_complex, restrict_map)
from .gluing import (Glued, GluingMorphism, GluingTriple, counit_iso, gluing_functor_GF, gluing_on_morphisms,
                     restriction_functor_RF)
from .linalg import Matrix, block_diag, hstack
from .perverse import ModelError, PerverseError, is_perverse
from .sheaf import Sheaf, SheafMorphism, identity, restrict, restrict_morphism


class TheoremViolation(AssertionError):
    """A statement that should hold for every input failed on this one."""


def _rewrap(phi: SheafMorphism, source: Sheaf, target: Sheaf) -> SheafMorphism:
    return SheafMorphism(source, target, phi.comp, check=False)


def _inverse(phi: SheafMorphism, what: str) -> SheafMorphism:
    if not phi.is_iso():
        raise ModelError(f"{what} is not invertible")
    return phi.inverse()


@dataclass
class Datum:
    """A complex Y on X with RΓ_K/RΓ_L data, a local system L on S and u, v."""
    Y: SheafComplex
    gc: GammaClosed
    L: Sheaf
    u: SheafMorphism   # H^{-d-1}(RΓ_L Y)|_S -> L
    v: SheafMorphism   # L -> H^{-d}(RΓ_K Y)|_S


def _HL(gc: GammaClosed, d: int) -> Sheaf:
    return cohomology_sheaf(gc.gamma_l, -d - 1)


def _HK(gc: GammaClosed, d: int) -> Sheaf:
    # H^{-d}(RΓ_K Y) read as H^{-d-1}(cone(rho))
    return cohomology_sheaf(gc.cone.cone, -d - 1)


def HL_map(f: ChainMap, gs: GammaClosed, gt: GammaClosed, d: int) -> SheafMorphism:
    return induced_map(gamma_open_map(f, gs.gopen, gt.gopen), -d - 1)


def HK_map(f: ChainMap, gs: GammaClosed, gt: GammaClosed, d: int) -> SheafMorphism:
    return induced_map(gamma_closed_map(f, gs, gt), -d - 1)


@dataclass
class GluedExtensionData:
    B: Sheaf
    phi: SheafMorphism          # H^{-d-1}(RΓ_L Y) -> B
    glued: Glued
    triple: GluingTriple


def build_extension(X, D: Datum) -> GluedExtensionData:
    """B glued from (L, j^{-1} H^{-d}(RΓ_K Y), eta v) and phi glued from (u, delta)."""
    d, S, X0 = X.d, X.S, X.X0
    HK = _HK(D.gc, d)
    rK = restriction_functor_RF(HK, S)
    vt = rK.f @ _rewrap(D.v, D.L, rK.FF)
    t = GluingTriple(X.space, rK.closed, D.L, rK.FU, _rewrap(vt, D.L, vt.target))
    g = gluing_functor_GF(t)
    HL = _HL(D.gc, d)
    glued_src, iso1 = counit_iso(HL, S)
    rL = glued_src.triple
    delta = induced_map(D.gc.delta, -d - 1)
    m = GluingMorphism(rL, t, _rewrap(D.u, rL.FF, D.L), _rewrap(restrict_morphism(delta, X0), rL.FU, rK.FU))
    problem = m.check()
    if problem:
        raise ModelError(f"(u, delta) is not a morphism of gluing data: {problem}")
    phi = gluing_on_morphisms(m, glued_src, g) @ _inverse(iso1, "gluing counit")
    return GluedExtensionData(g.sheaf, _rewrap(phi, HL, g.sheaf), g, t)


def datum_of(ctx: CftgContext, o: CftgObject) -> Datum:
    f = ctx.fgt(o.A)
    return Datum(f.bar.complex, f.gc, o.B, o.u, o.v)


@dataclass
class Realized:
    """A datum with its extension, the truncation of RΓ_L Y and Phi: τ -> B[d+1]."""
    datum: Datum
    ext: GluedExtensionData
    trunc: Truncation
    Phi: ChainMap
    cone: Cone = field(repr=False, default=None)

    def get_cone(self) -> Cone:
        if self.cone is None:
            self.cone = cone(self.Phi)
        return self.cone


def realize(X, D: Datum) -> Realized:
    k = -X.d - 1
    ext = build_extension(X, D)
    t = truncate_le(D.gc.gamma_l, k)
    top = single(ext.B, k)
    Phi = ChainMap(t.complex, top, {k: {x: ext.phi.comp[x] @ t.cohomology.Q[x] for x in X.space}}, check=False)
    return Realized(D, ext, t, Phi)


def appended_complex(X, R: Realized) -> SheafComplex:
    """τ^{<=-d-1} RΓ_L Y with B adjoined in degree -d."""
    k = -X.d - 1
    terms = dict(R.trunc.complex.terms)
    terms[k + 1] = R.ext.B
    d = {j: dict(dj) for j, dj in R.trunc.complex.d.items()}
    d[k] = {x: R.Phi.at(k, x) for x in X.space}
    return SheafComplex(X.space, terms, d, check=False)


@dataclass
class PResult:
    E: SheafComplex
    realized: Realized
    obj: CftgObject


def functor_P(ctx: CftgContext, o: CftgObject, *, check: bool = True) -> PResult:
    X = ctx.X
    R = realize(X, datum_of(ctx, o))
    E = appended_complex(X, R)
    if check:
        problem = validate_complex(E)
        if problem:
            raise TheoremViolation(f"P produced a non-complex: {problem}")
        rep = is_perverse(X, E)
        if not rep.verdict:
            raise TheoremViolation(f"P produced a non-perverse complex: {rep.failures[:3]}")
    return PResult(E, R, o)


# ---------------------------------------------------------------------------
# the functor C
# ---------------------------------------------------------------------------

@dataclass
class CResult:
    obj: CftgObject
    F: SheafComplex
    gF: GammaClosed
    parts: dict


def functor_C(ctx: CftgContext, F: SheafComplex, *, check: bool = True) -> CResult:
    X, K = ctx.X, ctx.K
    c, d = X.c, X.d
    if check:
        rep = is_perverse(X, F)
        if not rep.verdict:
            raise PerverseError(f"input is not perverse: {rep.failures[:3]}")
    FX0 = restrict_complex(F, X.X0)
    A = ctx.perverse(cohomology_sheaf(FX0, -c), "j^-1 F")
    fA = ctx.fgt(A)
    barF = derived_pushforward_open(X.space, X.X0, FX0)
    eta = adjunction_unit(F, barF)
    tr = truncate_le(FX0, -c)
    bar2 = derived_pushforward_open(X.space, X.X0, tr.complex)
    h7 = pushforward_map(tr.incl, bar2, barF)
    _, proj = cohomology_projection(tr)
    h6 = pushforward_map(proj, bar2, fA.bar)
    gF = gamma_closed(K, F)
    gY = gamma_closed(K, barF.complex)
    g2 = gamma_closed(K, bar2.complex)
    gA = fA.gc
    deltaF = induced_map(gF.delta, -d - 1)
    HLeta, HL7, HL6 = HL_map(eta, gF, gY, d), HL_map(h7, g2, gY, d), HL_map(h6, g2, gA, d)
    HKeta, HK7, HK6 = HK_map(eta, gF, gY, d), HK_map(h7, g2, gY, d), HK_map(h6, g2, gA, d)
    u = deltaF @ _inverse(HLeta, "RΓ_L of the unit") @ HL7 @ _inverse(HL6, "RΓ_L of the projection")
    v = HK6 @ _inverse(HK7, "RΓ_K of the inclusion") @ HKeta
    B = restrict(_HK(gF, d), X.S)
    u = _rewrap(restrict_morphism(u, X.S), fA.FA, B)
    v = _rewrap(restrict_morphism(v, X.S), B, fA.GA)
    obj = CftgObject(A, B, u, v)
    if check:
        problem = validate_object(ctx, obj)
        if problem:
            raise TheoremViolation(f"C produced an invalid quadruple: {problem}")
    parts = dict(barF=barF, eta=eta, tr=tr, bar2=bar2, h7=h7, h6=h6, gY=gY, g2=g2,
                 HLeta=HLeta, HL7=HL7, HKeta=HKeta, HK7=HK7, deltaF=deltaF)
    return CResult(obj, F, gF, parts)


# ---------------------------------------------------------------------------
# round trip C P
# ---------------------------------------------------------------------------

@dataclass
class RoundTripCP:
    P: PResult
    C: CResult
    iso: CftgMorphism
    ok: bool
    problem: str | None


def _unit_on_open(A: Sheaf, c: int, Yrest: SheafComplex, bar) -> ChainMap:
    """A[c] -> j^{-1} Rj_*(A[c]): stalks land in the length-one chains."""
    comp = {}
    for x in A.space:
        st = bar.stalks[x]
        rows, cols = st.dim(-c), A.dims[x]
        m = [[0] * cols for _ in range(rows)]
        if rows and cols:
            for sigma, q, pos in st.layout[-c]:
                if len(sigma) == 1:
                    r = A.map(x, sigma[0])
                    for i in range(r.rows):
                        for j in range(r.cols):
                            m[pos + i][j] = r.row(i)[j]
        comp[x] = Matrix.from_rows(m, cols=cols) if rows else Matrix.zeros(0, cols)
    return ChainMap(single(A, -c), Yrest, {-c: comp}, check=False)


def open_part_zigzag(ctx: CftgContext, P: PResult) -> "ZigZag":
    """A[c] -> j^{-1}Y <- j^{-1}τY -> j^{-1}E on X0, where Y = Rj_*(A[c]) and E = P(o)."""
    X, o, R = ctx.X, P.obj, P.realized
    fA = ctx.fgt(o.A)
    Y = fA.bar.complex
    tY = truncate_le(Y, -X.d - 1)
    A0, Y0, tY0, E0 = single(o.A.ls, -X.c), *(restrict_complex(C, X.X0) for C in (Y, tY.complex, P.E))
    unit = _unit_on_open(o.A.ls, X.c, Y0, fA.bar)
    incl = ChainMap(tY0, Y0, restrict_map(tY.incl, X.X0).comp, check=False)
    trho = truncate_le_map(fA.gc.gopen.rho, tY, R.trunc)
    toE = ChainMap(tY.complex, P.E, dict(trho.comp), check=False)
    toE0 = ChainMap(tY0, E0, restrict_map(toE, X.X0).comp, check=False)
    for name, f in (("unit", unit), ("truncation", incl), ("τρ", toE0)):
        problem = validate_chain_map(f)
        if problem:
            raise TheoremViolation(f"{name} is not a chain map on X0: {problem}")
    return ZigZag([A0, Y0, tY0, E0], [unit, incl, toE0], [True, False, True], ["unit", "truncation", "τρ"])


def roundtrip_CP(ctx: CftgContext, o: CftgObject, P: PResult | None = None) -> RoundTripCP:
    """An isomorphism C(P(o)) -> o of quadruples."""
    X, K = ctx.X, ctx.K
    c, d, k = X.c, X.d, -X.d - 1
    P = P or functor_P(ctx, o)
    Cr = functor_C(ctx, P.E)
    E, R = P.E, P.realized
    # a: A[c] -> j^{-1}Y <- j^{-1}τY -> j^{-1}E, on H^{-c}
    unit, incl, toE0 = open_part_zigzag(ctx, P).arrows
    Hunit, Hincl, HtoE = (induced_map(f, -c) for f in (unit, incl, toE0))
    a_inv = HtoE @ _inverse(Hincl, "H(truncation)") @ Hunit
    a = _rewrap(_inverse(a_inv, "comparison on X0"), Cr.obj.A.ls, o.A.ls)
    # b: L -> B|_S -> H^{-d}(RΓ_K B[d]) -> H^{-d}(RΓ_K E)
    Bd = single(R.ext.B, -d)
    beta = ChainMap(Bd, E, {-d: {x: Matrix.identity(R.ext.B.dims[x]) for x in X.space}}, check=False)
    gB = gamma_closed(K, Bd)
    Hpi = restrict_morphism(induced_map(gB.cone.pi, k), X.S)
    Hbeta = restrict_morphism(induced_map(gamma_closed_map(beta, gB, Cr.gF), k), X.S)
    isoS = R.ext.glued.iso_closed()
    b_inv = Hbeta @ _rewrap(_inverse(Hpi, "RΓ_K B[d] -> B[d]"), Hpi.target, Hpi.source) @ \
        _rewrap(_inverse(isoS, "B|_S -> L"), o.B, Hpi.target)
    b = _rewrap(_inverse(b_inv, "comparison on S"), Cr.obj.B, o.B)
    m = CftgMorphism(Cr.obj, o, a, b)
    problem = validate_cftg_morphism(ctx, m)
    if problem is None and not m.is_iso():
        problem = "comparison is not invertible"
    return RoundTripCP(P, Cr, m, problem is None, problem)


# ---------------------------------------------------------------------------
# maps of data and round trip P C
# ---------------------------------------------------------------------------

def datum_map_components(X, R1: Realized, R2: Realized, f: ChainMap, l: SheafMorphism) -> tuple[ChainMap, SheafMorphism]:
    """(τ RΓ_L(f), b) for a map of data given by f: Y1 -> Y2 and l: L1 -> L2.

    b is the glued map of (l, j^{-1} H^{-d}(RΓ_K f)) between the two B sheaves.
    """
    d = X.d
    D1, D2 = R1.datum, R2.datum
    a = truncate_le_map(gamma_open_map(f, D1.gc.gopen, D2.gc.gopen), R1.trunc, R2.trunc)
    hk = restrict_morphism(HK_map(f, D1.gc, D2.gc, d), X.X0)
    t1, t2 = R1.ext.triple, R2.ext.triple
    m = GluingMorphism(t1, t2, _rewrap(l, t1.FF, t2.FF), _rewrap(hk, t1.FU, t2.FU))
    problem = m.check()
    if problem:
        raise TheoremViolation(f"map of data does not respect the glue maps: {problem}")
    b = gluing_on_morphisms(m, R1.ext.glued, R2.ext.glued)
    return a, _rewrap(b, R1.ext.B, R2.ext.B)


def datum_cone_map(X, R1: Realized, R2: Realized, f: ChainMap, l: SheafMorphism) -> ChainMap:
    a, b = datum_map_components(X, R1, R2, f, l)
    k = -X.d - 1
    bm = ChainMap(R1.Phi.target, R2.Phi.target, {k: dict(b.comp)}, check=False)
    return cone_map(R1.get_cone(), R2.get_cone(), a, bm)


@dataclass
class ZigZag:
    """Chain maps between neighbouring complexes; ``forward[i]`` says whether arrow i points right."""
    complexes: list
    arrows: list
    forward: list
    labels: list

    def quasi_isos(self) -> list[bool]:
        return [is_quasi_iso(f) for f in self.arrows]

    def all_quasi_isos(self) -> bool:
        return all(self.quasi_isos())


@dataclass
class RoundTripPC:
    zigzag: ZigZag
    E: SheafComplex
    C: CResult
    ok: bool
    problem: str | None


def _project_F_from_cone_of_delta(cone_delta: Cone, gF: GammaClosed) -> ChainMap:
    """cone(RΓ_L F -> cone(rho)) -> F[1], picking out the F summand of cone(rho)."""
    target = shift(gF.source, 1)
    C, RL = cone_delta.cone, gF.gamma_l
    comp = {k: {x: hstack([Matrix.zeros(target.dim(k, x), RL.dim(k + 1, x)), gF.cone.pi.at(k, x)],
                          rows=target.dim(k, x))
                for x in C.space} for k in C.degrees}
    return ChainMap(C, target, comp, check=False)


def roundtrip_PC(ctx: CftgContext, F: SheafComplex, Cr: CResult | None = None) -> RoundTripPC:
    """A zig-zag of quasi-isomorphisms F <- ... -> P(C(F)), all arrows strict chain maps.

    ``Cr`` may carry an already computed C(F) for the same complex.
    """
    X = ctx.X
    d, k = X.d, -X.d - 1
    if Cr is None or Cr.F is not F:
        Cr = functor_C(ctx, F)
    o, p = Cr.obj, Cr.parts
    P = functor_P(ctx, o)
    gF, gY, g2 = Cr.gF, p["gY"], p["g2"]
    Lsh = o.B
    # data over F, Rj_*j^{-1}F, Rj_* of the truncation, and Rj_*(A[c])
    uF = _rewrap(restrict_morphism(p["deltaF"], X.S), restrict(_HL(gF, d), X.S), Lsh)
    DF = Datum(F, gF, Lsh, uF, identity(Lsh))
    uY = _rewrap(restrict_morphism(p["deltaF"] @ _inverse(p["HLeta"], "RΓ_L unit"), X.S),
                 restrict(_HL(gY, d), X.S), Lsh)
    vY = _rewrap(restrict_morphism(p["HKeta"], X.S), Lsh, restrict(_HK(gY, d), X.S))
    DY = Datum(p["barF"].complex, gY, Lsh, uY, vY)
    u2 = _rewrap(uY @ restrict_morphism(p["HL7"], X.S), restrict(_HL(g2, d), X.S), Lsh)
    v2 = _rewrap(restrict_morphism(_inverse(p["HK7"], "RΓ_K inclusion"), X.S) @ vY, Lsh, restrict(_HK(g2, d), X.S))
    D2 = Datum(p["bar2"].complex, g2, Lsh, u2, v2)
    RF_, RY, R2, RA = realize(X, DF), realize(X, DY), realize(X, D2), P.realized
    idL = identity(Lsh)
    # F[1] <- cone(delta) <- cone(τ delta) -> cone(g_F) -> cone(Phi_F)
    cdelta = cone(gF.delta)
    tRL = RF_.trunc
    tC = truncate_le(gF.cone.cone, k)
    tdelta = truncate_le_map(gF.delta, tRL, tC)
    ctdelta = cone(tdelta)
    Hk_target, proj = cohomology_projection(tC)
    gmap = proj @ tdelta
    cg = cone(gmap)
    _, iso1 = counit_iso(_HK(gF, d), X.S)
    iso1_inv = _rewrap(_inverse(iso1, "gluing counit"), Hk_target.term(k), RF_.ext.B)
    arrows = [
        ("project to F[1]", _project_F_from_cone_of_delta(cdelta, gF), False),
        ("truncation inclusions", cone_map(ctdelta, cdelta, tRL.incl, tC.incl), False),
        ("projection to cohomology", cone_map(ctdelta, cg, identity_map(tRL.complex), proj), True),
        ("gluing counit", cone_map(cg, RF_.get_cone(), identity_map(tRL.complex),
                                    ChainMap(gmap.target, RF_.Phi.target, {k: dict(iso1_inv.comp)}, check=False)), True),
        ("unit of j", datum_cone_map(X, RF_, RY, p["eta"], idL), True),
        ("truncation on X0", datum_cone_map(X, R2, RY, p["h7"], idL), False),
        ("projection on X0", datum_cone_map(X, R2, RA, p["h6"], idL), True),
    ]
    E1 = shift(P.E, 1)
    last = RA.get_cone().cone
    comp = {}
    for j in last.degrees:
        comp[j] = {}
        for x in X.space:
            n = RA.trunc.complex.dim(j + 1, x)
            b = RA.ext.B.dims[x] if j == k else 0
            blocks = [Matrix.identity(n)] + ([Matrix.identity(b).scale(-1)] if b else [])
            comp[j][x] = block_diag(blocks)
    arrows.append(("sign on B", ChainMap(last, E1, comp, check=False), True))
    complexes = [shift(F, 1), cdelta.cone, ctdelta.cone, cg.cone, RF_.get_cone().cone, RY.get_cone().cone,
                 R2.get_cone().cone, last, E1]
    problem = None
    for label, f, _ in arrows:
        bad = validate_chain_map(f)
        if bad:
            problem = f"{label}: {bad}"
            break
    zz = ZigZag([shift(C, -1) for C in complexes], [shift_map(f, -1) for _, f, _ in arrows],
                [fw for _, _, fw in arrows], [lab for lab, _, _ in arrows])
    if problem is None:
        for label, q in zip(zz.labels, zz.quasi_isos()):
            if not q:
                problem = f"{label} is not a quasi-isomorphism"
                break
    return RoundTripPC(zz, P.E, Cr, problem is None, problem)


# ---------------------------------------------------------------------------
# P on morphisms
# ---------------------------------------------------------------------------

@dataclass
class PMorphism:
    map: ChainMap
    fill: FillIn | None
    agrees_with_fill: bool | None


def _projection_to_truncation(P: PResult) -> ChainMap:
    """E -> τ^{<=-d-1} RΓ_L Y, forgetting B."""
    t = P.realized.trunc.complex
    return ChainMap(P.E, t, {j: {x: Matrix.identity(t.dim(j, x)) for x in t.space} for j in t.degrees}, check=False)


def functor_P_on_morphism(ctx: CftgContext, m: CftgMorphism, P1: PResult | None = None, P2: PResult | None = None,
                          *, certify: bool = True) -> PMorphism:
    """The strict chain map P(m), optionally certified against the triangle fill-in."""
    X = ctx.X
    k = -X.d - 1
    P1 = P1 or functor_P(ctx, m.source)
    P2 = P2 or functor_P(ctx, m.target)
    R1, R2 = P1.realized, P2.realized
    f1, f2 = ctx.fgt(m.source.A), ctx.fgt(m.target.A)
    Yg = pushforward_map(sheaf_map_as_chain(m.a, -X.c), f1.bar, f2.bar)
    a, b = datum_map_components(X, R1, R2, Yg, m.b)
    comp = {j: dict(a.comp[j]) for j in a.comp}
    comp[k + 1] = dict(b.comp)
    strict = ChainMap(P1.E, P2.E, comp, check=False)
    problem = validate_chain_map(strict)
    if problem:
        raise TheoremViolation(f"P(m) is not a chain map: {problem}")
    if not certify:
        return PMorphism(strict, None, None)
    pi1, pi2 = _projection_to_truncation(P1), _projection_to_truncation(P2)
    c1, c2 = cone(pi1), cone(pi2)
    B1, B2 = R1.ext.B, R2.ext.B
    r = ChainMap(c1.cone, single(B1, k),
                 {k: {x: hstack([Matrix.identity(B1.dims[x]), R1.Phi.at(k, x)], rows=B1.dims[x]) for x in X.space}},
                 check=False)
    s2 = ChainMap(single(B2, k), c2.cone,
                  {k: {x: _embed_first(B2.dims[x], c2.cone.dim(k, x)) for x in X.space}}, check=False)
    bm = ChainMap(single(B1, k), single(B2, k), {k: dict(b.comp)}, check=False)
    gamma = s2 @ bm @ r
    fill = fill_in(pi1, pi2, a, gamma)
    return PMorphism(strict, fill, are_homotopic(fill.alpha, strict))


def _embed_first(n: int, total: int) -> Matrix:
    return Matrix.from_sparse(total, n, [{i: 1} if i < n else {} for i in range(total)])
