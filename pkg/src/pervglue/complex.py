"""Bounded cochain complexes of poset sheaves.

Differentials raise degree.  The cone of ``f: A -> B`` is
``Cone^k = A^{k+1} (+) B^k`` with differential ``[[-d_A, 0], [f, d_B]]``;
a shift ``C[n]`` has ``C[n]^k = C^{n+k}`` and differential ``(-1)^n d``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .linalg import (Matrix, block_diag, cokernel_projection, hstack, image_basis, kernel_basis,
                     nullspace_sparse, rank, right_inverse, solve_linear, solve_sparse, vstack)
from .poset import Poset
from .sheaf import Sheaf, SheafMorphism, zero_sheaf


class ComplexError(ValueError):
    pass


class NoFillIn(ComplexError):
    pass


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


class SheafComplex:
    """Sheaves ``terms[k]`` with stalk differentials ``d[k][x]: C^k_x -> C^{k+1}_x``."""

    def __init__(self, space: Poset, terms: Mapping[int, Sheaf], d: Mapping[int, Mapping[str, Matrix]] | None = None,
                 *, check: bool = True):
        self.space = space
        self.terms = {k: F for k, F in terms.items() if not F.is_zero()}
        for F in self.terms.values():
            if F.space.elements != space.elements:
                raise ComplexError("term lives on a different poset")
        self.d: dict[int, dict[str, Matrix]] = {}
        for k in self.terms:
            if k + 1 in self.terms:
                dk = dict((d or {}).get(k, {}))
                self.d[k] = {x: dk.get(x) if dk.get(x) is not None else
                             Matrix.zeros(self.terms[k + 1].dims[x], self.terms[k].dims[x]) for x in space}
        self._cohom: dict[int, "Cohomology"] = {}
        if check:
            problem = validate_complex(self)
            if problem:
                raise ComplexError(problem)

    def __repr__(self):
        return "SheafComplex(" + ", ".join(f"{k}: {self.terms[k].dims}" for k in sorted(self.terms)) + ")"

    @property
    def degrees(self) -> list[int]:
        return sorted(self.terms)

    def term(self, k: int) -> Sheaf:
        F = self.terms.get(k)
        return F if F is not None else zero_sheaf(self.space)

    def dim(self, k: int, x: str) -> int:
        F = self.terms.get(k)
        return F.dims[x] if F is not None else 0

    def diff(self, k: int, x: str) -> Matrix:
        dk = self.d.get(k)
        if dk is not None:
            return dk[x]
        return Matrix.zeros(self.dim(k + 1, x), self.dim(k, x))

    def differential(self, k: int) -> SheafMorphism:
        return SheafMorphism(self.term(k), self.term(k + 1), {x: self.diff(k, x) for x in self.space}, check=False)

    def is_zero(self) -> bool:
        return not self.terms

    def key(self) -> tuple:
        return (tuple((k, self.terms[k].key()) for k in self.degrees),
                tuple((k, tuple(self.d[k][x] for x in self.space)) for k in sorted(self.d)))

    def equals(self, other: "SheafComplex") -> bool:
        return self.key() == other.key()


def validate_complex(C: SheafComplex) -> str | None:
    from .sheaf import validate_morphism
    for k in C.d:
        p = validate_morphism(C.differential(k))
        if p:
            return f"differential {k}: {p}"
        if k + 1 in C.d:
            for x in C.space:
                if not (C.d[k + 1][x] @ C.d[k][x]).is_zero():
                    return f"d^{k + 1} d^{k} != 0 at {x}"
    return None


def single(F: Sheaf, degree: int = 0) -> SheafComplex:
    """A sheaf placed in one degree."""
    return SheafComplex(F.space, {degree: F}, check=False)


def zero_complex(space: Poset) -> SheafComplex:
    return SheafComplex(space, {}, check=False)


class ChainMap:
    def __init__(self, source: SheafComplex, target: SheafComplex, comp: Mapping[int, Mapping[str, Matrix]] | None = None,
                 *, check: bool = True):
        self.source, self.target = source, target
        self.comp: dict[int, dict[str, Matrix]] = {}
        comp = comp or {}
        for k in source.degrees:
            if k in target.terms:
                ck = comp.get(k, {})
                self.comp[k] = {x: ck.get(x) if ck.get(x) is not None else
                                Matrix.zeros(target.dim(k, x), source.dim(k, x)) for x in source.space}
        if check:
            problem = validate_chain_map(self)
            if problem:
                raise ComplexError(problem)

    def __repr__(self):
        return f"ChainMap({self.source!r} -> {self.target!r})"

    def at(self, k: int, x: str) -> Matrix:
        ck = self.comp.get(k)
        if ck is not None:
            return ck[x]
        return Matrix.zeros(self.target.dim(k, x), self.source.dim(k, x))

    def degree_map(self, k: int) -> SheafMorphism:
        return SheafMorphism(self.source.term(k), self.target.term(k), {x: self.at(k, x) for x in self.source.space},
                             check=False)

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        comp = {k: {x: self.at(k, x) @ other.at(k, x) for x in self.source.space} for k in other.source.degrees}
        return ChainMap(other.source, self.target, comp, check=False)

    def __add__(self, other: "ChainMap") -> "ChainMap":
        comp = {k: {x: self.at(k, x) + other.at(k, x) for x in self.source.space} for k in self.comp}
        return ChainMap(self.source, self.target, comp, check=False)

    def __sub__(self, other: "ChainMap") -> "ChainMap":
        return self + other.scale(-1)

    def scale(self, c) -> "ChainMap":
        return ChainMap(self.source, self.target, {k: {x: m.scale(c) for x, m in ck.items()}
                                                   for k, ck in self.comp.items()}, check=False)

    def is_zero(self) -> bool:
        return all(m.is_zero() for ck in self.comp.values() for m in ck.values())

    def equals(self, other: "ChainMap") -> bool:
        return all(self.at(k, x) == other.at(k, x) for k in set(self.comp) | set(other.comp) for x in self.source.space)


def validate_chain_map(f: ChainMap) -> str | None:
    from .sheaf import validate_morphism
    S, T = f.source, f.target
    for k in f.comp:
        p = validate_morphism(f.degree_map(k))
        if p:
            return f"component {k}: {p}"
    for k in set(S.degrees) | set(k - 1 for k in S.degrees):
        for x in S.space:
            left = f.at(k + 1, x) @ S.diff(k, x)
            right = T.diff(k, x) @ f.at(k, x)
            if left != right:
                return f"chain map condition fails in degree {k} at {x}"
    return None


def identity_map(C: SheafComplex) -> ChainMap:
    return ChainMap(C, C, {k: {x: Matrix.identity(C.dim(k, x)) for x in C.space} for k in C.degrees}, check=False)


def zero_map(C: SheafComplex, D: SheafComplex) -> ChainMap:
    return ChainMap(C, D, {}, check=False)


def sheaf_map_as_chain(phi: SheafMorphism, degree: int = 0) -> ChainMap:
    return ChainMap(single(phi.source, degree), single(phi.target, degree),
                    {degree: dict(phi.comp)}, check=False)


@dataclass
class Homotopy:
    """h^k: source^k -> target^{k-1} with f - g = d h + h d."""
    f: ChainMap
    g: ChainMap
    comp: dict = field(default_factory=dict)

    def at(self, k: int, x: str) -> Matrix:
        m = self.comp.get(k, {}).get(x)
        if m is None:
            return Matrix.zeros(self.f.target.dim(k - 1, x), self.f.source.dim(k, x))
        return m

    def verify(self) -> bool:
        S, T = self.f.source, self.f.target
        for k in set(S.degrees):
            for x in S.space:
                lhs = self.f.at(k, x) - self.g.at(k, x)
                rhs = T.diff(k - 1, x) @ self.at(k, x) + self.at(k + 1, x) @ S.diff(k, x)
                if lhs != rhs:
                    return False
        return True


# ---------------------------------------------------------------------------
# shift, cone, truncation
# ---------------------------------------------------------------------------

def shift(C: SheafComplex, n: int) -> SheafComplex:
    s = _sign(n)
    terms = {k - n: F for k, F in C.terms.items()}
    d = {k - n: {x: m.scale(s) if s < 0 else m for x, m in dk.items()} for k, dk in C.d.items()}
    return SheafComplex(C.space, terms, d, check=False)


def shift_map(f: ChainMap, n: int) -> ChainMap:
    return ChainMap(shift(f.source, n), shift(f.target, n), {k - n: ck for k, ck in f.comp.items()}, check=False)


@dataclass
class Cone:
    """cone(f) together with the canonical maps of its triangle."""
    f: ChainMap
    cone: SheafComplex
    iota: ChainMap   # target -> cone
    pi: ChainMap     # cone -> source[1]


def cone(f: ChainMap) -> Cone:
    A, B = f.source, f.target
    space = A.space
    degs = set(k - 1 for k in A.degrees) | set(B.degrees)
    terms, d = {}, {}
    for k in degs:
        dims = {x: A.dim(k + 1, x) + B.dim(k, x) for x in space}
        rest = {}
        for c in space.covers:
            rest[c] = block_diag([A.term(k + 1).rest[c], B.term(k).rest[c]])
        terms[k] = Sheaf(space, dims, rest, check=False)
    for k in degs:
        if k + 1 not in degs:
            continue
        dk = {}
        for x in space:
            top = hstack([-A.diff(k + 1, x), Matrix.zeros(A.dim(k + 2, x), B.dim(k, x))])
            bot = hstack([f.at(k + 1, x), B.diff(k, x)])
            dk[x] = vstack([top, bot])
        d[k] = dk
    Cn = SheafComplex(space, terms, d, check=False)
    iota = {k: {x: vstack([Matrix.zeros(A.dim(k + 1, x), B.dim(k, x)), Matrix.identity(B.dim(k, x))])
                for x in space} for k in B.degrees}
    pi = {k: {x: hstack([Matrix.identity(A.dim(k + 1, x)), Matrix.zeros(A.dim(k + 1, x), B.dim(k, x))])
              for x in space} for k in degs}
    return Cone(f, Cn, ChainMap(B, Cn, iota, check=False), ChainMap(Cn, shift(A, 1), pi, check=False))


def cone_map(c1: Cone, c2: Cone, a: ChainMap, b: ChainMap, *, check: bool = True) -> ChainMap:
    """Map cone(f1) -> cone(f2) induced by a strictly commuting square b f1 = f2 a."""
    if check:
        for k in c1.f.source.degrees:
            for x in c1.cone.space:
                if b.at(k, x) @ c1.f.at(k, x) != c2.f.at(k, x) @ a.at(k, x):
                    raise ComplexError(f"square does not commute in degree {k} at {x}")
    comp = {}
    for k in c1.cone.degrees:
        comp[k] = {x: block_diag([a.at(k + 1, x), b.at(k, x)]) for x in c1.cone.space}
    return ChainMap(c1.cone, c2.cone, comp, check=False)


@dataclass
class Cohomology:
    """Stalkwise data of H^k: kernel basis Z, quotient map Q (in Z-coordinates), section S."""
    complex: SheafComplex
    degree: int
    Z: dict
    Q: dict
    S: dict
    sheaf: Sheaf
    _to_H: dict = field(default_factory=dict, repr=False, compare=False)

    def project(self, x: str) -> Matrix:
        """ker d^k (in Z-coordinates) -> H^k."""
        return self.Q[x]

    def lift(self, x: str) -> Matrix:
        """H^k -> C^k, a cycle representative."""
        return self.Z[x] @ self.S[x]

    def classes(self, x: str, vectors: Matrix) -> Matrix:
        """Classes of cycles given as columns in C^k coordinates."""
        if not (self.complex.diff(self.degree, x) @ vectors).is_zero():
            raise ComplexError(f"vectors are not cycles in degree {self.degree} at {x}")
        to_H = self._to_H.get(x)
        if to_H is None:
            # Z has independent columns, so a left inverse recovers Z-coordinates of cycles
            Z = self.Z[x]
            left = right_inverse(Z.T).T if Z.cols else Matrix.zeros(0, Z.rows)
            to_H = self._to_H[x] = self.Q[x] @ left
        return to_H @ vectors


def cohomology(C: SheafComplex, k: int) -> Cohomology:
    cached = C._cohom.get(k)
    if cached is not None:
        return cached
    Z, Q, S = {}, {}, {}
    for x in C.space:
        Z[x] = kernel_basis(C.diff(k, x))
        incoming = C.diff(k - 1, x)
        bz = solve_linear(Z[x], image_basis(incoming))
        Q[x] = cokernel_projection(bz)
        S[x] = right_inverse(Q[x])
    rest = {}
    for x, y in C.space.covers:
        moved = C.term(k).rest[(x, y)] @ Z[x] @ S[x] if C.dim(k, x) and C.dim(k, y) else \
            Matrix.zeros(C.dim(k, y), Q[x].rows)
        zc = solve_linear(Z[y], moved)
        rest[(x, y)] = Q[y] @ zc
    H = Sheaf(C.space, {x: Q[x].rows for x in C.space}, rest, check=False)
    out = Cohomology(C, k, Z, Q, S, H)
    C._cohom[k] = out
    return out


def cohomology_sheaf(C: SheafComplex, k: int) -> Sheaf:
    return cohomology(C, k).sheaf


def induced_map(f: ChainMap, k: int) -> SheafMorphism:
    """H^k(f) as a morphism of cohomology sheaves."""
    Hs, Ht = cohomology(f.source, k), cohomology(f.target, k)
    comp = {}
    for x in f.source.space:
        comp[x] = Ht.classes(x, f.at(k, x) @ Hs.lift(x))
    return SheafMorphism(Hs.sheaf, Ht.sheaf, comp, check=False)


def cohomology_dims(C: SheafComplex, x: str) -> dict[int, int]:
    """dim H^k(C)_x for every degree with a nonzero group."""
    out = {}
    for k in range(min(C.degrees, default=0) - 1, max(C.degrees, default=0) + 2):
        n = C.dim(k, x)
        if not n:
            continue
        h = n - rank(C.diff(k, x)) - rank(C.diff(k - 1, x))
        if h:
            out[k] = h
    return out


def is_acyclic(C: SheafComplex) -> bool:
    return all(not cohomology_dims(C, x) for x in C.space)


def is_quasi_iso(f: ChainMap) -> bool:
    return is_acyclic(cone(f).cone)


@dataclass
class Truncation:
    complex: SheafComplex
    incl: ChainMap
    cohomology: Cohomology
    degree: int

    def top_projection(self, x: str) -> Matrix:
        """tau^k = ker d^k -> H^k at x."""
        return self.cohomology.Q[x]


def truncate_le(C: SheafComplex, k: int) -> Truncation:
    """Kernel truncation tau^{<=k} C with its inclusion into C."""
    H = cohomology(C, k)
    space = C.space
    terms = {j: F for j, F in C.terms.items() if j < k}
    Zsheaf_rest = {}
    for x, y in space.covers:
        Zsheaf_rest[(x, y)] = solve_linear(H.Z[y], C.term(k).rest[(x, y)] @ H.Z[x])
    terms[k] = Sheaf(space, {x: H.Z[x].cols for x in space}, Zsheaf_rest, check=False)
    d = {j: dj for j, dj in C.d.items() if j < k - 1}
    if k - 1 in C.terms:
        d[k - 1] = {x: solve_linear(H.Z[x], C.diff(k - 1, x)) for x in space}
    T = SheafComplex(space, terms, d, check=False)
    comp = {j: {x: Matrix.identity(C.dim(j, x)) for x in space} for j in C.degrees if j < k}
    comp[k] = dict(H.Z)
    return Truncation(T, ChainMap(T, C, comp, check=False), H, k)


def truncate_le_map(f: ChainMap, t1: Truncation, t2: Truncation) -> ChainMap:
    """tau^{<=k}(f) between two truncations in the same degree."""
    k = t1.degree
    comp = {}
    for j in t1.complex.degrees:
        if j < k:
            comp[j] = {x: f.at(j, x) for x in f.source.space}
    comp[k] = {x: solve_linear(t2.cohomology.Z[x], f.at(k, x) @ t1.cohomology.Z[x]) for x in f.source.space}
    return ChainMap(t1.complex, t2.complex, comp, check=False)


def cohomology_projection(t: Truncation) -> tuple[SheafComplex, ChainMap]:
    """The chain map tau^{<=k} C -> H^k(C)[-k]."""
    k = t.degree
    target = single(t.cohomology.sheaf, k)
    return target, ChainMap(t.complex, target, {k: dict(t.cohomology.Q)}, check=False)


# ---------------------------------------------------------------------------
# linear systems over Hom complexes
# ---------------------------------------------------------------------------

class _Unknowns:
    """Indexing of a block of unknown matrices (one per degree and element)."""

    def __init__(self, offset: int = 0):
        self.offset = offset
        self.blocks: dict[tuple, tuple[int, int, int]] = {}
        self.size = 0

    def add(self, key, rows: int, cols: int):
        if rows and cols:
            self.blocks[key] = (self.offset + self.size, rows, cols)
            self.size += rows * cols

    def var(self, key, i, j):
        start, r, c = self.blocks[key]
        return start + i * c + j

    def has(self, key):
        return key in self.blocks

    def matrix(self, key, vec: Mapping[int, object], rows: int, cols: int) -> Matrix:
        if key not in self.blocks:
            return Matrix.zeros(rows, cols)
        start, r, c = self.blocks[key]
        data = [[vec.get(start + i * c + j, 0) for j in range(c)] for i in range(r)]
        return Matrix(r, c, data)


def _add_product(eqs, coef, left: Matrix | None, unk: _Unknowns, key, right: Matrix | None, nrows, ncols):
    """Accumulate coef * left @ X[key] @ right into eqs (dict of (i,j) -> {var: value})."""
    if not unk.has(key):
        return
    start, r, c = unk.blocks[key]
    L = left.row_dicts() if left is not None else [{i: 1} for i in range(r)]
    if right is not None:
        R = [dict() for _ in range(c)]
        for a in range(c):
            for j, v in enumerate(right.row(a)):
                if v:
                    R[a][j] = v
    else:
        R = [{a: 1} for a in range(c)]
    for i in range(nrows):
        li = L[i]
        if not li:
            continue
        for p, lv in li.items():
            for a in range(c):
                for j, rv in R[a].items():
                    eq = eqs.setdefault((i, j), {})
                    var = start + p * c + a
                    eq[var] = eq.get(var, 0) + coef * lv * rv


def _flush(eqs: dict, out: list, rhs: list | None = None, rhs_mat: Matrix | None = None, nrows=0, ncols=0):
    if rhs_mat is not None:
        # nonzero right-hand sides need a row even when no unknown appears
        for i in range(nrows):
            for j in range(ncols):
                v = rhs_mat[i, j]
                if v:
                    eqs.setdefault((i, j), {})
    for (i, j), eq in eqs.items():
        eq = {k: v for k, v in eq.items() if v}
        b = rhs_mat[i, j] if rhs_mat is not None else 0
        if eq or b:
            out.append(eq)
            if rhs is not None:
                rhs.append(b)


class _MapSystem:
    """Unknown natural maps source^k -> target^{k+shift} for each k."""

    def __init__(self, S: SheafComplex, T: SheafComplex, shift_: int, unk: _Unknowns, tag: str):
        self.S, self.T, self.shift, self.unk, self.tag = S, T, shift_, unk, tag
        for k in S.degrees:
            for x in S.space:
                unk.add((tag, k, x), T.dim(k + shift_, x), S.dim(k, x))

    def key(self, k, x):
        return (self.tag, k, x)

    def naturality(self, equations: list):
        S, T = self.S, self.T
        for k in S.degrees:
            for x, y in S.space.covers:
                nr, nc = T.dim(k + self.shift, y), S.dim(k, x)
                if not nr or not nc:
                    continue
                eqs: dict = {}
                _add_product(eqs, 1, T.term(k + self.shift).rest[(x, y)], self.unk, self.key(k, x), None, nr, nc)
                _add_product(eqs, -1, None, self.unk, self.key(k, y), S.term(k).rest[(x, y)], nr, nc)
                _flush(eqs, equations)

    def extract(self, vec) -> dict:
        return {k: {x: self.unk.matrix(self.key(k, x), vec, self.T.dim(k + self.shift, x), self.S.dim(k, x))
                    for x in self.S.space} for k in self.S.degrees}


def _chain_equations(f: _MapSystem, equations: list, rhs: list | None = None):
    """Chain condition d_T f^k = f^{k+1} d_S."""
    S, T = f.S, f.T
    for k in set(S.degrees) | {k - 1 for k in S.degrees}:
        for x in S.space:
            nr, nc = T.dim(k + 1, x), S.dim(k, x)
            if not nr or not nc:
                continue
            eqs: dict = {}
            _add_product(eqs, 1, T.diff(k, x), f.unk, f.key(k, x), None, nr, nc)
            _add_product(eqs, -1, None, f.unk, f.key(k + 1, x), S.diff(k, x), nr, nc)
            _flush(eqs, equations, rhs, None)


def chain_maps_basis(C: SheafComplex, D: SheafComplex) -> list[ChainMap]:
    unk = _Unknowns()
    f = _MapSystem(C, D, 0, unk, "f")
    eqs: list = []
    f.naturality(eqs)
    _chain_equations(f, eqs)
    basis = nullspace_sparse(eqs, unk.size)
    return [ChainMap(C, D, f.extract(v), check=False) for v in basis]


def _homotopy_image(C: SheafComplex, D: SheafComplex) -> list[dict]:
    """Null-homotopic chain maps d h + h d for a basis of natural h (as f-vectors)."""
    unk = _Unknowns()
    h = _MapSystem(C, D, -1, unk, "h")
    eqs: list = []
    h.naturality(eqs)
    basis = nullspace_sparse(eqs, unk.size)
    out = []
    for v in basis:
        hm = h.extract(v)
        comp = {}
        for k in C.degrees:
            comp[k] = {}
            for x in C.space:
                m = D.diff(k - 1, x) @ hm[k][x] if k in hm else Matrix.zeros(D.dim(k, x), C.dim(k, x))
                if k + 1 in hm:
                    m = m + hm[k + 1][x] @ C.diff(k, x)
                comp[k][x] = m
        out.append(comp)
    return out


def _flatten(C: SheafComplex, D: SheafComplex, comp: Mapping) -> dict:
    vec = {}
    i = 0
    for k in C.degrees:
        for x in C.space:
            rows, cols = D.dim(k, x), C.dim(k, x)
            m = comp.get(k, {}).get(x) if k in comp else None
            for a in range(rows):
                for b in range(cols):
                    if m is not None and m[a, b]:
                        vec[i] = m[a, b]
                    i += 1
    return vec


@dataclass
class HomClasses:
    dimension: int
    representatives: list
    cycles: int
    boundaries: int


def hom_homotopy_classes(C: SheafComplex, D: SheafComplex) -> HomClasses:
    """Chain maps C -> D modulo homotopy: dimension and representatives."""
    Z = chain_maps_basis(C, D)
    if not Z:
        return HomClasses(0, [], 0, 0)
    B = _homotopy_image(C, D)
    from .linalg import rref_rows
    bvecs = [_flatten(C, D, b) for b in B]
    piv = rref_rows([dict(v) for v in bvecs])
    nb = len(piv)
    reps = []
    cur = dict(piv)
    for z in Z:
        zv = _flatten(C, D, z.comp)
        trial = rref_rows(list(cur.values()) + [zv])
        if len(trial) > len(cur):
            reps.append(z)
            cur = trial
    return HomClasses(len(reps), reps, len(Z), nb)


def is_null_homotopic(f: ChainMap) -> bool:
    B = _homotopy_image(f.source, f.target)
    from .linalg import rref_rows
    base = rref_rows([_flatten(f.source, f.target, b) for b in B])
    trial = rref_rows(list(base.values()) + [_flatten(f.source, f.target, f.comp)])
    return len(trial) == len(base)


def are_homotopic(f: ChainMap, g: ChainMap) -> bool:
    return is_null_homotopic(f - g)


# ---------------------------------------------------------------------------
# fill-in for a morphism of triangles
# ---------------------------------------------------------------------------

@dataclass
class FillIn:
    alpha: ChainMap
    h1: Homotopy
    h2: Homotopy
    unique: bool
    hom_checks: dict
    difference_dimension: int


def _homotopy_system(eqs, rhs, unk, lhs_terms, rhs_terms, hsys: _MapSystem, S: SheafComplex, T: SheafComplex):
    """Equations  sum(lhs_terms) - (d_T h + h d_S) = sum(rhs_terms)  for maps S -> T.

    lhs_terms: list of (coef, left Matrix fn(k,x), msys, right fn(k,x)) with unknown maps;
    rhs_terms: function (k, x) -> Matrix of known part.
    """
    for k in S.degrees:
        for x in S.space:
            nr, nc = T.dim(k, x), S.dim(k, x)
            if not nr or not nc:
                continue
            e: dict = {}
            for coef, left, msys, right in lhs_terms:
                L = left(k, x) if left else None
                R = right(k, x) if right else None
                _add_product(e, coef, L, unk, msys.key(k, x), R, nr, nc)
            _add_product(e, -1, T.diff(k - 1, x), unk, hsys.key(k, x), None, nr, nc)
            _add_product(e, -1, None, unk, hsys.key(k + 1, x), S.diff(k, x), nr, nc)
            _flush(e, eqs, rhs, rhs_terms(k, x), nr, nc)


def fill_in(u: ChainMap, u2: ChainMap, beta: ChainMap, gamma: ChainMap) -> FillIn:
    """Complete a morphism of triangles on the first vertex.

    Rows are ``A -u-> B -> cone(u) -> A[1]`` and ``A' -u2-> B' -> cone(u2) -> A'[1]``;
    given ``beta: B -> B'`` and ``gamma: cone(u) -> cone(u2)``, find ``alpha: A -> A'``
    with ``u2 alpha ~ beta u`` and ``alpha[1] pi ~ pi' gamma`` (explicit homotopies).
    ``unique`` is certified by Hom_K(B, C'[-1]) = Hom_K(C, B') = 0.
    """
    A, B, A2, B2 = u.source, u.target, u2.source, u2.target
    c1, c2 = cone(u), cone(u2)
    C, C2 = c1.cone, c2.cone
    if gamma.source.key() != C.key() or gamma.target.key() != C2.key():
        raise ComplexError("gamma must map cone(u) to cone(u2)")
    A2s = shift(A2, 1)
    unk = _Unknowns()
    al = _MapSystem(A, A2, 0, unk, "alpha")
    h1 = _MapSystem(A, B2, -1, unk, "h1")
    h2 = _MapSystem(C, A2s, -1, unk, "h2")
    eqs: list = []
    rhs: list = []
    for sysm in (al, h1, h2):
        sysm.naturality(eqs)
    _chain_equations(al, eqs)
    rhs.extend([0] * len(eqs))
    bu = beta @ u
    _homotopy_system(eqs, rhs, unk, [(1, lambda k, x: u2.at(k, x), al, None)],
                     lambda k, x: bu.at(k, x), h1, A, B2)
    pg = c2.pi @ gamma
    _homotopy_system(eqs, rhs, unk, [(1, None, _ShiftedView(al, 1), lambda k, x: c1.pi.at(k, x))],
                     lambda k, x: pg.at(k, x), h2, C, A2s)
    sol = solve_sparse(eqs, rhs, unk.size)
    if sol is None:
        raise NoFillIn("no fill-in: the squares cannot be completed (violated hypothesis)")
    alpha = ChainMap(A, A2, al.extract(sol), check=False)
    H1 = Homotopy(u2 @ alpha, bu, h1.extract(sol))
    H2 = Homotopy(shift_map(alpha, 1) @ c1.pi, pg, h2.extract(sol))
    # homogeneous system: differences of solutions, modulo null-homotopic alpha
    homog = nullspace_sparse(eqs, unk.size)
    diffs = [ChainMap(A, A2, al.extract(v), check=False) for v in homog]
    B_img = _homotopy_image(A, A2)
    from .linalg import rref_rows
    base = rref_rows([_flatten(A, A2, b) for b in B_img])
    cur = dict(base)
    extra = 0
    for dmap in diffs:
        trial = rref_rows(list(cur.values()) + [_flatten(A, A2, dmap.comp)])
        if len(trial) > len(cur):
            extra += 1
            cur = trial
    hom1 = hom_homotopy_classes(B, shift(C2, -1)).dimension
    hom2 = hom_homotopy_classes(C, B2).dimension
    return FillIn(alpha, H1, H2, hom1 == 0 and hom2 == 0,
                  {"Hom(B,C'[-1])": hom1, "Hom(C,B')": hom2}, extra)


class _ShiftedView:
    """Reuse alpha's unknowns as the components of alpha[1]."""

    def __init__(self, base: _MapSystem, n: int):
        self.base, self.n = base, n

    def key(self, k, x):
        return self.base.key(k + self.n, x)
