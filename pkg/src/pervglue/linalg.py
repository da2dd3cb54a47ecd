"""Exact linear algebra over the rationals.

Every stalk-level map in the package is a :class:`Matrix` of
:class:`fractions.Fraction` entries.  Elimination works on sparse row
dictionaries; the reduced row echelon form is unique, so kernel bases,
image bases and particular solutions are reproducible bit for bit.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence


class ShapeError(ValueError):
    pass


def as_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError(f"refusing inexact entry {x!r}")
    return Fraction(x)


class Matrix:
    """Immutable dense matrix with exact rational entries (row-major)."""

    __slots__ = ("rows", "cols", "_data", "_hash")

    def __init__(self, rows: int, cols: int, data: Sequence[Sequence] | None = None):
        if rows < 0 or cols < 0:
            raise ShapeError("negative shape")
        self.rows = rows
        self.cols = cols
        if data is None:
            zero = Fraction(0)
            self._data = tuple((zero,) * cols for _ in range(rows))
        else:
            if len(data) != rows or any(len(r) != cols for r in data):
                raise ShapeError(f"entries do not match shape {rows}x{cols}")
            self._data = tuple(tuple(as_rational(v) for v in r) for r in data)
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> "Matrix":
        rows = list(rows)
        if not rows:
            return cls(0, cols or 0)
        return cls(len(rows), len(rows[0]), rows)

    @classmethod
    def _trusted(cls, rows: int, cols: int, data: tuple) -> "Matrix":
        m = cls.__new__(cls)
        m.rows, m.cols, m._data, m._hash = rows, cols, data, None
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        one, zero = Fraction(1), Fraction(0)
        return cls._trusted(n, n, tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int) -> "Matrix":
        if not columns:
            return cls(rows, 0)
        return cls(rows, len(columns), [[c[i] for c in columns] for i in range(rows)])

    @classmethod
    def from_sparse(cls, rows: int, cols: int, entries: Iterable[dict]) -> "Matrix":
        zero = Fraction(0)
        data = []
        for r in entries:
            line = [zero] * cols
            for j, v in r.items():
                line[j] = v if type(v) is Fraction else as_rational(v)
            data.append(tuple(line))
        return cls._trusted(rows, cols, tuple(data))

    # access -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self._data[i][j]

    def row(self, i: int) -> tuple:
        return self._data[i]

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self._data)

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self._data]

    def row_dicts(self) -> list[dict]:
        return [{j: v for j, v in enumerate(r) if v} for r in self._data]

    def is_zero(self) -> bool:
        return all(not v for r in self._data for v in r)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, self._data))
        return self._hash

    def __repr__(self):
        body = "; ".join(" ".join(str(v) for v in r) for r in self._data)
        return f"Matrix({self.rows}x{self.cols}: [{body}])"

    # arithmetic -------------------------------------------------------
    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        zero = Fraction(0)
        brows = other._data
        n = other.cols
        out = []
        for r in self._data:
            acc = [zero] * n
            for k, a in enumerate(r):
                if a:
                    bk = brows[k]
                    for j in range(n):
                        b = bk[j]
                        if b:
                            acc[j] += a * b
            out.append(tuple(acc))
        return Matrix._trusted(self.rows, n, tuple(out))

    def __add__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        return Matrix._trusted(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self._data, other._data)))

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def __neg__(self) -> "Matrix":
        return Matrix._trusted(self.rows, self.cols, tuple(tuple(-a for a in r) for r in self._data))

    def scale(self, c) -> "Matrix":
        c = as_rational(c)
        return Matrix._trusted(self.rows, self.cols, tuple(tuple(c * a for a in r) for r in self._data))

    @property
    def T(self) -> "Matrix":
        return Matrix._trusted(self.cols, self.rows, tuple(zip(*self._data)) if self.rows else
                               tuple(() for _ in range(self.cols)))

    def take_rows(self, idx: Sequence[int]) -> "Matrix":
        return Matrix._trusted(len(idx), self.cols, tuple(self._data[i] for i in idx))

    def take_columns(self, idx: Sequence[int]) -> "Matrix":
        return Matrix._trusted(self.rows, len(idx), tuple(tuple(r[j] for j in idx) for r in self._data))

    # serialization ----------------------------------------------------
    def to_json(self) -> list[list[str]]:
        return [[str(v) for v in r] for r in self._data]

    @classmethod
    def from_json(cls, obj, rows: int | None = None, cols: int | None = None) -> "Matrix":
        if not obj:
            return cls(rows or 0, cols or 0)
        m = cls.from_rows(obj)
        if (rows is not None and m.rows != rows) or (cols is not None and m.cols != cols):
            raise ShapeError(f"expected {rows}x{cols} matrix, got {m.rows}x{m.cols}")
        return m


def hstack(blocks: Sequence[Matrix], rows: int | None = None) -> Matrix:
    if not blocks:
        return Matrix(rows or 0, 0)
    r = blocks[0].rows
    if any(b.rows != r for b in blocks):
        raise ShapeError("hstack row mismatch")
    data = tuple(sum((b._data[i] for b in blocks), ()) for i in range(r))
    return Matrix._trusted(r, sum(b.cols for b in blocks), data)


def vstack(blocks: Sequence[Matrix], cols: int | None = None) -> Matrix:
    if not blocks:
        return Matrix(0, cols or 0)
    c = blocks[0].cols
    if any(b.cols != c for b in blocks):
        raise ShapeError("vstack column mismatch")
    return Matrix._trusted(sum(b.rows for b in blocks), c, sum((b._data for b in blocks), ()))


def block_diag(blocks: Sequence[Matrix]) -> Matrix:
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    zero = Fraction(0)
    data = []
    off = 0
    for b in blocks:
        for r in b._data:
            data.append((zero,) * off + r + (zero,) * (cols - off - b.cols))
        off += b.cols
    return Matrix._trusted(rows, cols, tuple(data))


# ---------------------------------------------------------------------------
# elimination
# ---------------------------------------------------------------------------

def _int_row(src: dict) -> dict[int, int]:
    """Clear denominators and divide out the content of a sparse row."""
    row = {}
    for j, v in src.items():
        if v:
            row[j] = v if type(v) is Fraction or type(v) is int else as_rational(v)
    den = 1
    for v in row.values():
        if type(v) is Fraction and v.denominator != 1:
            den = den * v.denominator // gcd(den, v.denominator)
    out = {j: int(v * den) for j, v in row.items()}
    return _primitive(out)


def _primitive(row: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return row
    return {j: v // g for j, v in row.items()} if g > 1 else row


def _eliminate(row: dict[int, int], p: dict[int, int], col: int) -> dict[int, int]:
    """Clear column col of row using pivot row p, staying in integers."""
    a, c = p[col], row[col]
    g = gcd(a, c)
    a, c = a // g, c // g
    out = {j: a * v for j, v in row.items()} if a != 1 else dict(row)
    for j, v in p.items():
        nv = out.get(j, 0) - c * v
        if nv:
            out[j] = nv
        else:
            out.pop(j, None)
    return _primitive(out)


def rref_rows(rows: Iterable[dict]) -> dict[int, dict]:
    """Reduced row echelon form of sparse rows, keyed by pivot column.

    Elimination runs fraction-free on integer rows; pivots are scaled to 1 only
    at the end.  The reduced form is unique, so the result does not depend on
    how it was reached.
    """
    pivots: dict[int, dict[int, int]] = {}
    for src in rows:
        row = _int_row(src)
        while row:
            lead = min(row)
            p = pivots.get(lead)
            if p is None:
                pivots[lead] = row
                break
            row = _eliminate(row, p, lead)
    for col in sorted(pivots, reverse=True):
        p = pivots[col]
        for other_col, r in pivots.items():
            if other_col < col and col in r:
                pivots[other_col] = _eliminate(r, p, col)
    out = {}
    for col, r in pivots.items():
        lead = r[col]
        out[col] = {j: Fraction(v, lead) for j, v in r.items()}
    return out


def rank(A: Matrix) -> int:
    return len(rref_rows(A.row_dicts()))


def _nullspace_from_pivots(pivots: dict[int, dict], ncols: int) -> list[dict]:
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        vec = {f: Fraction(1)}
        for col, r in pivots.items():
            v = r.get(f)
            if v:
                vec[col] = -v
        basis.append(vec)
    return basis


def nullspace_sparse(equations: Iterable[dict], nvars: int) -> list[dict]:
    """Basis of the solution space of a homogeneous sparse system."""
    return _nullspace_from_pivots(rref_rows(equations), nvars)


def solve_sparse(equations: Sequence[dict], rhs: Sequence, nvars: int) -> dict | None:
    """One solution of a sparse system (free variables set to zero), or None."""
    aug = []
    for eq, b in zip(equations, rhs):
        row = dict(eq)
        b = as_rational(b)
        if b:
            row[nvars] = b
        aug.append(row)
    piv = rref_rows(aug)
    if nvars in piv:
        return None
    return {col: r[nvars] for col, r in piv.items() if r.get(nvars)}


def kernel_basis(A: Matrix) -> Matrix:
    vecs = nullspace_sparse(A.row_dicts(), A.cols)
    return Matrix.from_sparse(A.cols, len(vecs), _transpose_sparse(vecs, A.cols))


def _transpose_sparse(vecs: list[dict], n: int) -> list[dict]:
    rows = [dict() for _ in range(n)]
    for k, v in enumerate(vecs):
        for i, x in v.items():
            rows[i][k] = x
    return rows


def image_basis(A: Matrix) -> Matrix:
    piv = rref_rows(A.row_dicts())
    return A.take_columns(sorted(piv))


def cokernel_projection(A: Matrix) -> Matrix:
    """Full-row-rank P with P @ A = 0 and P.rows = A.rows - rank(A)."""
    return kernel_basis(A.T).T


def kernel_image_cokernel(A: Matrix) -> tuple[Matrix, Matrix, Matrix]:
    return kernel_basis(A), image_basis(A), cokernel_projection(A)


def solve_linear(A: Matrix, b: Matrix) -> Matrix | None:
    """Solve A x = b for a column (or several columns) b; None if inconsistent.

    Free variables are set to zero, so the answer is determined by the
    reduced row echelon form of ``[A | b]``.
    """
    if A.rows != b.rows:
        raise ShapeError(f"solve_linear: A has {A.rows} rows, b has {b.rows}")
    n, m = A.cols, b.cols
    aug = []
    for i in range(A.rows):
        row = {j: v for j, v in enumerate(A.row(i)) if v}
        for k, v in enumerate(b.row(i)):
            if v:
                row[n + k] = v
        aug.append(row)
    piv = rref_rows(aug)
    if any(col >= n for col in piv):
        return None
    out = [dict() for _ in range(n)]
    for col, r in piv.items():
        for j, v in r.items():
            if j >= n:
                out[col][j - n] = v
    return Matrix.from_sparse(n, m, out)


def affine_solutions(fn, nvars: int) -> tuple[dict | None, list[dict]]:
    """Solutions of fn(v) = 0 for an affine map fn from sparse vectors to flat lists.

    Returns one solution (free variables zero, or None if inconsistent) and a
    basis of the homogeneous solutions.
    """
    const = [as_rational(c) for c in fn({})]
    rows = [dict() for _ in const]
    for j in range(nvars):
        col = fn({j: Fraction(1)})
        for i, v in enumerate(col):
            v = as_rational(v) - const[i]
            if v:
                rows[i][j] = v
    basis = nullspace_sparse(rows, nvars)
    return solve_sparse(rows, [-c for c in const], nvars), basis


def inverse(A: Matrix) -> Matrix:
    if A.rows != A.cols:
        raise ShapeError("inverse of a non-square matrix")
    x = solve_linear(A, Matrix.identity(A.rows))
    if x is None or rank(A) != A.rows:
        raise ZeroDivisionError("matrix is singular")
    return x


def is_invertible(A: Matrix) -> bool:
    return A.rows == A.cols and rank(A) == A.rows


def right_inverse(A: Matrix) -> Matrix:
    """S with A @ S = I, for A of full row rank."""
    x = solve_linear(A, Matrix.identity(A.rows))
    if x is None:
        raise ZeroDivisionError("matrix does not have full row rank")
    return x


def fmt(x: Fraction) -> str:
    return str(x)
