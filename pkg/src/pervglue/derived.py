"""Derived functors on poset sheaves.

``Rj_*`` along an open inclusion is computed by the non-degenerate bar
construction: in bar degree ``k`` the stalk at ``x`` is the sum over strict
chains ``x_0 < ... < x_k`` in ``U ∩ U_x`` of ``C(x_k)``.  Because the
construction is a functor on the nose, units, connecting maps and
naturality squares all exist at chain level.
"""
from __future__ import annotations

from dataclasses import dataclass

from .complex import (ChainMap, Cone, SheafComplex, cone, cone_map, shift, shift_map)
from .linalg import Matrix
from .poset import Poset, Subspace, all_chains
from .sheaf import Sheaf


class DerivedError(ValueError):
    pass


def _members(s) -> tuple[str, ...]:
    return s.members if isinstance(s, Subspace) else tuple(s)


def restrict_complex(C: SheafComplex, s) -> SheafComplex:
    from .sheaf import restrict
    sub = C.space.sub(_members(s))
    terms = {k: restrict(F, sub.elements) for k, F in C.terms.items()}
    d = {k: {x: dk[x] for x in sub} for k, dk in C.d.items()}
    return SheafComplex(sub, terms, d, check=False)


def restrict_map(f: ChainMap, s) -> ChainMap:
    src, tgt = restrict_complex(f.source, s), restrict_complex(f.target, s)
    return ChainMap(src, tgt, {k: {x: ck[x] for x in src.space} for k, ck in f.comp.items()}, check=False)


# ---------------------------------------------------------------------------
# bar construction
# ---------------------------------------------------------------------------

class _BarStalk:
    """Summand layout of the bar complex of C over a fixed list of chains."""

    def __init__(self, C: SheafComplex, chains: list[tuple[str, ...]]):
        self.C = C
        self.chains = chains
        self.layout: dict[int, list[tuple[tuple[str, ...], int, int]]] = {}
        self.offset: dict[int, dict[tuple[str, ...], tuple[int, int]]] = {}
        for n in self._degrees():
            items, offs, pos = [], {}, 0
            for sigma in chains:
                p = n - (len(sigma) - 1)
                dim = C.dim(p, sigma[-1])
                if dim:
                    items.append((sigma, p, pos))
                    offs[sigma] = (pos, dim)
                    pos += dim
            if pos:
                self.layout[n] = items
                self.offset[n] = offs
        self.dims = {n: sum(C.dim(p, s[-1]) for s, p, _ in items) for n, items in self.layout.items()}

    def _degrees(self):
        if not self.C.degrees or not self.chains:
            return []
        top = max(len(s) for s in self.chains) - 1
        return range(min(self.C.degrees), max(self.C.degrees) + top + 1)

    def dim(self, n: int) -> int:
        return self.dims.get(n, 0)

    def differential(self, n: int, space: Poset) -> Matrix:
        rows, cols = self.dim(n + 1), self.dim(n)
        if not rows or not cols:
            return Matrix.zeros(rows, cols)
        C = self.C
        out = [dict() for _ in range(rows)]
        tgt = self.offset[n + 1]
        chainset = set(tgt)
        members = sorted({y for s in self.chains for y in s}, key=space.index)
        for sigma, p, pos in self.layout[n]:
            k = len(sigma) - 1
            last = sigma[-1]
            dim = C.dim(p, last)
            # internal differential, sign (-1)^k
            if sigma in tgt and C.dim(p + 1, last):
                tpos, tdim = tgt[sigma]
                m = C.diff(p, last)
                s = -1 if k % 2 else 1
                _put(out, m, tpos, pos, s)
            # bar differential: insert one vertex
            for y in members:
                for i in range(k + 2):
                    lo = sigma[i - 1] if i > 0 else None
                    hi = sigma[i] if i <= k else None
                    if (lo is None or space.lt(lo, y)) and (hi is None or space.lt(y, hi)):
                        tau = sigma[:i] + (y,) + sigma[i:]
                        if tau not in chainset:
                            continue
                        tpos, tdim = tgt[tau]
                        s = -1 if i % 2 else 1
                        if i == k + 1:
                            m = C.term(p).map(last, y)
                        else:
                            m = Matrix.identity(dim)
                        _put(out, m, tpos, pos, s)
        return Matrix.from_sparse(rows, cols, out)


def _put(out: list[dict], m: Matrix, r0: int, c0: int, sign: int):
    for i in range(m.rows):
        row = out[r0 + i]
        for j, v in enumerate(m.row(i)):
            if v:
                nv = row.get(c0 + j, 0) + sign * v
                if nv:
                    row[c0 + j] = nv
                else:
                    row.pop(c0 + j, None)


def _chains_in(P: Poset, members) -> list[tuple[str, ...]]:
    return [c for group in all_chains(P, members) for c in group]


def derived_pushforward_open(X: Poset, U, C: SheafComplex) -> "BarComplex":
    """Rj_* C for C a complex on the open subposet U of X."""
    members = _members(U)
    if not X.is_up_set(members):
        raise DerivedError(f"{list(members)} is not open")
    if set(C.space.elements) != set(members):
        raise DerivedError("complex is not supported on the open part")
    Usub = X.sub(members)
    stalks = {}
    for x in X:
        local = [y for y in X.up(x) if y in set(members)]
        stalks[x] = _BarStalk(C, _chains_in(Usub, local))
    degrees = sorted({n for st in stalks.values() for n in st.dims})
    terms, d = {}, {}
    for n in degrees:
        rest = {}
        for x, y in X.covers:
            rest[(x, y)] = _projection(stalks[x], stalks[y], n)
        terms[n] = Sheaf(X, {x: stalks[x].dim(n) for x in X}, rest, check=False)
    for n in degrees:
        if n + 1 in terms:
            d[n] = {x: stalks[x].differential(n, X) for x in X}
    return BarComplex(SheafComplex(X, terms, d, check=False), stalks, tuple(members), C)


def _projection(sx: _BarStalk, sy: _BarStalk, n: int) -> Matrix:
    rows, cols = sy.dim(n), sx.dim(n)
    out = [dict() for _ in range(rows)]
    if rows and cols:
        src = sx.offset[n]
        for sigma, p, pos in sy.layout[n]:
            spos, dim = src[sigma]
            for i in range(dim):
                out[pos + i][spos + i] = 1
    return Matrix.from_sparse(rows, cols, out)


@dataclass
class BarComplex:
    complex: SheafComplex
    stalks: dict
    open_members: tuple
    source: SheafComplex


def pushforward_map(f: ChainMap, bs: BarComplex, bt: BarComplex) -> ChainMap:
    """Rj_*(f) between two bar complexes over the same open set."""
    X = bs.complex.space
    comp = {}
    for n in bs.complex.degrees:
        if n not in bt.complex.terms:
            continue
        comp[n] = {}
        for x in X:
            ss, st = bs.stalks[x], bt.stalks[x]
            rows, cols = st.dim(n), ss.dim(n)
            out = [dict() for _ in range(rows)]
            if rows and cols:
                tgt = st.offset[n]
                for sigma, p, pos in ss.layout[n]:
                    if sigma in tgt:
                        tpos, _ = tgt[sigma]
                        _put(out, f.at(p, sigma[-1]), tpos, pos, 1)
            comp[n][x] = Matrix.from_sparse(rows, cols, out)
    return ChainMap(bs.complex, bt.complex, comp, check=False)


def adjunction_unit(C: SheafComplex, bar: BarComplex) -> ChainMap:
    """The unit C -> Rj_* j^{-1} C (bar degree 0 receives all restrictions)."""
    X = C.space
    comp = {}
    for p in C.degrees:
        if p not in bar.complex.terms:
            continue
        comp[p] = {}
        for x in X:
            st = bar.stalks[x]
            rows, cols = st.dim(p), C.dim(p, x)
            out = [dict() for _ in range(rows)]
            if rows and cols:
                for sigma, q, pos in st.layout[p]:
                    if len(sigma) == 1:
                        _put(out, C.term(p).map(x, sigma[0]), pos, 0, 1)
            comp[p][x] = Matrix.from_sparse(rows, cols, out)
    return ChainMap(C, bar.complex, comp, check=False)


def global_sections(C: SheafComplex) -> SheafComplex:
    """Hypercohomology complex: the bar construction over the whole poset."""
    pt = Poset(["*"], [])
    st = _BarStalk(C, _chains_in(C.space, C.space.elements))
    terms = {n: Sheaf(pt, {"*": st.dim(n)}, {}, check=False) for n in st.dims}
    d = {n: {"*": st.differential(n, C.space)} for n in st.dims if n + 1 in st.dims}
    return SheafComplex(pt, terms, d, check=False)


# ---------------------------------------------------------------------------
# local cohomology
# ---------------------------------------------------------------------------

@dataclass
class GammaOpen:
    """RΓ_L C = Rj_{L*} j_L^{-1} C with its unit rho: C -> RΓ_L C."""
    members: tuple
    source: SheafComplex
    bar: BarComplex
    rho: ChainMap

    @property
    def complex(self) -> SheafComplex:
        return self.bar.complex


def gamma_open(L, C: SheafComplex) -> GammaOpen:
    members = _members(L)
    bar = derived_pushforward_open(C.space, members, restrict_complex(C, members))
    return GammaOpen(tuple(members), C, bar, adjunction_unit(C, bar))


def gamma_open_map(f: ChainMap, gs: GammaOpen, gt: GammaOpen) -> ChainMap:
    return pushforward_map(restrict_map(f, gs.members), gs.bar, gt.bar)


@dataclass
class GammaClosed:
    """RΓ_K C := cone(rho)[-1], with the triangle RΓ_K C -> C -> RΓ_L C -> RΓ_K C[1].

    ``cone`` is cone(rho) = RΓ_K C[1]; ``delta`` is its canonical inclusion of
    RΓ_L C, i.e. the connecting map of the triangle.
    """
    members: tuple
    source: SheafComplex
    gopen: GammaOpen
    cone: Cone

    @property
    def complex(self) -> SheafComplex:
        return shift(self.cone.cone, -1)

    @property
    def delta(self) -> ChainMap:
        return self.cone.iota

    @property
    def to_source(self) -> ChainMap:
        return shift_map(self.cone.pi, -1)

    @property
    def gamma_l(self) -> SheafComplex:
        return self.gopen.complex


def gamma_closed(K, C: SheafComplex) -> GammaClosed:
    members = _members(K)
    X = C.space
    if not X.is_down_set(members):
        raise DerivedError(f"{list(members)} is not closed")
    L = [x for x in X if x not in set(members)]
    go = gamma_open(L, C)
    return GammaClosed(tuple(members), C, go, cone(go.rho))


def gamma_closed_map(f: ChainMap, ks: GammaClosed, kt: GammaClosed) -> ChainMap:
    """Map of cones cone(rho_s) -> cone(rho_t), i.e. RΓ_K(f)[1]."""
    g = gamma_open_map(f, ks.gopen, kt.gopen)
    return cone_map(ks.cone, kt.cone, f, g, check=False)
