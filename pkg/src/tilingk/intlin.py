"""Exact integer and rational linear algebra.

Everything here works on Python integers (and :class:`fractions.Fraction`
where division is unavoidable), so results never depend on word size.
Matrices are immutable :class:`IntegerMatrix` values; the normal-form
routines copy into scratch lists, operate in place and freeze the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "IntegerMatrix",
    "SmithDecomposition",
    "Sublattice",
    "EigenData",
    "Spectrum",
    "QuotientStructure",
    "MatrixError",
    "snf",
    "hnf",
    "kernel_basis",
    "rank",
    "det",
    "char_poly",
    "integer_eigen_data",
    "generalized_eigenlattice",
    "saturate",
    "eventual_kernel",
    "quotient_structure",
    "integer_solve",
    "rational_solve",
    "column_span",
    "matrix_to_json",
    "matrix_from_json",
    "unimodular_inverse",
    "poly_of_matrix",
    "integer_roots",
    "LatticeSolver",
]


class MatrixError(ValueError):
    """Raised for shape mismatches and malformed matrix input."""


# ---------------------------------------------------------------------------
# IntegerMatrix


@dataclass(frozen=True)
class IntegerMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise MatrixError("entries do not match the declared shape")

    # -- construction -----------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], cols: int | None = None) -> "IntegerMatrix":
        data = tuple(tuple(_as_int(x) for x in r) for r in rows)
        if cols is None:
            cols = len(data[0]) if data else 0
        return cls(len(data), cols, data)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], nrows: int | None = None) -> "IntegerMatrix":
        if not columns:
            if nrows is None:
                raise MatrixError("row count needed for an empty column list")
            return cls.zeros(nrows, 0)
        n = len(columns[0])
        if nrows is not None and n != nrows:
            raise MatrixError("column length mismatch")
        if any(len(c) != n for c in columns):
            raise MatrixError("columns of unequal length")
        return cls(n, len(columns), tuple(tuple(int(c[i]) for c in columns) for i in range(n)))

    @classmethod
    def identity(cls, n: int) -> "IntegerMatrix":
        return cls(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntegerMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def diagonal(cls, diag: Sequence[int], rows: int | None = None, cols: int | None = None) -> "IntegerMatrix":
        rows = len(diag) if rows is None else rows
        cols = len(diag) if cols is None else cols
        out = [[0] * cols for _ in range(rows)]
        for i, d in enumerate(diag):
            out[i][i] = d
        return cls.from_rows(out, cols)

    # -- access -------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self.entries)

    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(c) for c in zip(*self.entries)] if self.rows else [() for _ in range(self.cols)]

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def flat(self) -> tuple[int, ...]:
        """Entries in row-major order."""
        return tuple(x for r in self.entries for x in r)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.entries for x in r)

    def diagonal_entries(self) -> list[int]:
        return [self.entries[i][i] for i in range(min(self.rows, self.cols))]

    # -- algebra ------------------------------------------------------------
    @property
    def T(self) -> "IntegerMatrix":
        if self.rows == 0:
            return IntegerMatrix.zeros(self.cols, 0)
        return IntegerMatrix(self.cols, self.rows, tuple(zip(*self.entries)))

    def __matmul__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.rows:
            raise MatrixError(f"cannot multiply {self.shape} by {other.shape}")
        cols = other.columns()
        return IntegerMatrix(
            self.rows,
            other.cols,
            tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.entries),
        )

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        if len(v) != self.cols:
            raise MatrixError("vector length mismatch")
        return tuple(sum(a * b for a, b in zip(r, v)) for r in self.entries)

    def __add__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        self._same_shape(other)
        return IntegerMatrix(
            self.rows, self.cols, tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def __sub__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        self._same_shape(other)
        return IntegerMatrix(
            self.rows, self.cols, tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def __neg__(self) -> "IntegerMatrix":
        return self.scale(-1)

    def scale(self, k: int) -> "IntegerMatrix":
        return IntegerMatrix(self.rows, self.cols, tuple(tuple(k * a for a in r) for r in self.entries))

    def __pow__(self, k: int) -> "IntegerMatrix":
        if not self.is_square():
            raise MatrixError("power of a non-square matrix")
        if k < 0:
            raise MatrixError("negative power")
        result = IntegerMatrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def hstack(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.rows != other.rows:
            raise MatrixError("row count mismatch in hstack")
        return IntegerMatrix(self.rows, self.cols + other.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def vstack(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.cols:
            raise MatrixError("column count mismatch in vstack")
        return IntegerMatrix(self.rows + other.rows, self.cols, self.entries + other.entries)

    def submatrix(self, rows: Sequence[int] | slice, cols: Sequence[int] | slice) -> "IntegerMatrix":
        ri = range(self.rows)[rows] if isinstance(rows, slice) else rows
        ci = range(self.cols)[cols] if isinstance(cols, slice) else cols
        return IntegerMatrix(len(ri), len(ci), tuple(tuple(self.entries[i][j] for j in ci) for i in ri))

    def permute_rows(self, perm: Sequence[int]) -> "IntegerMatrix":
        """Row i of the result is row perm[i] of self."""
        return self.submatrix(list(perm), slice(None))

    def permute_cols(self, perm: Sequence[int]) -> "IntegerMatrix":
        return self.submatrix(slice(None), list(perm))

    def _same_shape(self, other: "IntegerMatrix") -> None:
        if self.shape != other.shape:
            raise MatrixError(f"shape mismatch {self.shape} vs {other.shape}")

    def __str__(self) -> str:
        if not self.rows or not self.cols:
            return f"[{self.rows}x{self.cols}]"
        w = max(len(str(x)) for r in self.entries for x in r)
        return "\n".join(" ".join(str(x).rjust(w) for x in r) for r in self.entries)


def _as_int(x: object) -> int:
    if isinstance(x, bool):
        raise MatrixError("booleans are not matrix entries")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            return int(x.strip())
        except ValueError as exc:
            raise MatrixError(f"not an integer literal: {x!r}") from exc
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    raise MatrixError(f"not an integer: {x!r}")


def matrix_to_json(a: IntegerMatrix) -> dict:
    return {"rows": a.rows, "cols": a.cols, "entries": [[str(x) for x in r] for r in a.entries]}


def matrix_from_json(doc: object) -> IntegerMatrix:
    """Parse ``{"rows", "cols", "entries"}`` (entries as ints or decimal strings).

    A bare list of rows is accepted too, for convenience on the command line.
    """
    if isinstance(doc, list):
        return IntegerMatrix.from_rows(doc)
    if not isinstance(doc, dict) or "entries" not in doc:
        raise MatrixError("matrix JSON must be an object with an 'entries' field")
    entries = doc["entries"]
    if not isinstance(entries, list) or any(not isinstance(r, list) for r in entries):
        raise MatrixError("'entries' must be a list of rows")
    rows = doc.get("rows", len(entries))
    cols = doc.get("cols", len(entries[0]) if entries else 0)
    if rows != len(entries):
        raise MatrixError("'rows' disagrees with the entries")
    return IntegerMatrix.from_rows(entries, cols)


# ---------------------------------------------------------------------------
# helpers on scratch lists


def _identity_lists(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _freeze(m: list[list[int]], cols: int) -> IntegerMatrix:
    return IntegerMatrix(len(m), cols, tuple(tuple(r) for r in m))


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithDecomposition:
    U: IntegerMatrix
    D: IntegerMatrix
    V: IntegerMatrix

    @property
    def invariant_factors(self) -> list[int]:
        """Diagonal of D, zeros included."""
        return self.D.diagonal_entries()

    @property
    def rank(self) -> int:
        return sum(1 for d in self.invariant_factors if d)


def snf(a: IntegerMatrix) -> SmithDecomposition:
    """Smith normal form ``U·A·V = D`` with a nonnegative divisibility chain.

    Euclid-style elimination: the pivot is always the entry of least
    magnitude in its row and column, and reductions use nearest-integer
    quotients, which keeps intermediate entries small in practice.
    """
    m, n = a.rows, a.cols
    s = a.to_lists()
    u = _identity_lists(m)
    v = _identity_lists(n)

    def swap_rows(i: int, j: int) -> None:
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i: int, j: int) -> None:
        for r in s:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]

    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            row = s[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
        if best is None:
            break
        swap_rows(t, best[1])
        swap_cols(t, best[2])
        while True:
            p = s[t][t]
            for i in range(t + 1, m):
                b = s[i][t]
                if b:
                    q = _nearest_quotient(b, p)
                    s[i] = [y - q * x for x, y in zip(s[t], s[i])]
                    u[i] = [y - q * x for x, y in zip(u[t], u[i])]
            for j in range(t + 1, n):
                b = s[t][j]
                if b:
                    q = _nearest_quotient(b, p)
                    for r in s:
                        r[j] -= q * r[t]
                    for r in v:
                        r[j] -= q * r[t]
            # any remainder left in row/column t becomes the next pivot
            cand = [(abs(s[i][t]), i, t) for i in range(t + 1, m) if s[i][t]]
            cand += [(abs(s[t][j]), t, j) for j in range(t + 1, n) if s[t][j]]
            if cand:
                _, i, j = min(cand)
                if i != t:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            bad = next((i for i in range(t + 1, m) if any(x % p for x in s[i][t + 1 :])), None)
            if bad is None:
                break
            s[t] = [x + y for x, y in zip(s[t], s[bad])]
            u[t] = [x + y for x, y in zip(u[t], u[bad])]
        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]
    return SmithDecomposition(_freeze(u, m), _freeze(s, n), _freeze(v, n))


def _nearest_quotient(b: int, p: int) -> int:
    q, r = divmod(b, p)
    if 2 * abs(r) > abs(p):
        q += 1 if (r > 0) == (p > 0) else -1
    return q


# ---------------------------------------------------------------------------
# Hermite normal form (column style)


def hnf(a: IntegerMatrix) -> tuple[IntegerMatrix, IntegerMatrix]:
    """Column Hermite normal form ``H = A·U``.

    H is lower-triangular in echelon sense: the pivot columns come first,
    each pivot is positive, pivot rows strictly increase, entries left of a
    pivot lie in ``[0, pivot)`` and all non-pivot columns are zero.
    """
    m, n = a.rows, a.cols
    h = a.to_lists()
    u = _identity_lists(n)

    def swap(i: int, j: int) -> None:
        for r in h:
            r[i], r[j] = r[j], r[i]
        for r in u:
            r[i], r[j] = r[j], r[i]

    def axpy(j: int, q: int, k: int) -> None:
        # col_j -= q * col_k
        for r in h:
            if r[k]:
                r[j] -= q * r[k]
        for r in u:
            if r[k]:
                r[j] -= q * r[k]

    k = 0
    for i in range(m):
        if k == n:
            break
        while True:
            row = h[i]
            nz = [(abs(row[j]), j) for j in range(k, n) if row[j]]
            if not nz:
                break
            _, j0 = min(nz)
            if j0 != k:
                swap(k, j0)
            if len(nz) == 1:
                break
            p = h[i][k]
            for j in range(k + 1, n):
                b = h[i][j]
                if b:
                    axpy(j, _nearest_quotient(b, p), k)
        p = h[i][k] if k < n else 0
        if p == 0:
            continue
        if p < 0:
            for r in h:
                r[k] = -r[k]
            for r in u:
                r[k] = -r[k]
            p = -p
        for j in range(k):
            q = h[i][j] // p
            if q:
                axpy(j, q, k)
        k += 1
    return _freeze(h, n), _freeze(u, n)


def _pivot_count(h: IntegerMatrix) -> int:
    return sum(1 for c in h.columns() if any(c))


def column_span(a: IntegerMatrix) -> IntegerMatrix:
    """Canonical basis (HNF pivot columns) of the lattice spanned by the columns of A."""
    h, _ = hnf(a)
    k = _pivot_count(h)
    return h.submatrix(slice(None), list(range(k)))


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class Sublattice:
    ambient_rank: int
    basis: IntegerMatrix
    saturated: bool = False

    def __post_init__(self) -> None:
        if self.basis.rows != self.ambient_rank:
            raise MatrixError("basis rows must equal the ambient rank")

    @property
    def rank(self) -> int:
        return self.basis.cols

    @classmethod
    def from_columns(cls, n: int, cols: Sequence[Sequence[int]], saturated: bool = False) -> "Sublattice":
        return cls(n, IntegerMatrix.from_columns(list(cols), n), saturated)

    @classmethod
    def full(cls, n: int) -> "Sublattice":
        return cls(n, IntegerMatrix.identity(n), True)

    @classmethod
    def zero(cls, n: int) -> "Sublattice":
        return cls(n, IntegerMatrix.zeros(n, 0), True)

    def canonical(self) -> "Sublattice":
        """Same lattice with its HNF basis."""
        return Sublattice(self.ambient_rank, column_span(self.basis), self.saturated)

    def contains(self, v: Sequence[int]) -> bool:
        return integer_solve(self.basis, v) is not None

    def contains_lattice(self, other: "Sublattice") -> bool:
        return all(self.contains(c) for c in other.basis.columns())

    def same_lattice(self, other: "Sublattice") -> bool:
        return column_span(self.basis) == column_span(other.basis)

    def columns(self) -> list[tuple[int, ...]]:
        return self.basis.columns()


def kernel_basis(a: IntegerMatrix) -> Sublattice:
    """Saturated integer kernel, returned with its canonical basis."""
    h, u = hnf(a)
    k = _pivot_count(h)
    raw = u.submatrix(slice(None), list(range(k, a.cols)))
    return Sublattice(a.cols, column_span(raw) if raw.cols else raw, True)


def rank(a: IntegerMatrix) -> int:
    """Rational rank by integer elimination (rows kept primitive)."""
    m = a.to_lists()
    rows, cols = a.rows, a.cols
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, rows):
            f = m[i][c]
            if f:
                g = math.gcd(p, f)
                new = [(p // g) * y - (f // g) * x for x, y in zip(m[r], m[i])]
                content = math.gcd(*new)
                m[i] = [x // content for x in new] if content > 1 else new
        r += 1
        if r == rows:
            break
    return r


def det(a: IntegerMatrix) -> int:
    """Determinant by Bareiss elimination."""
    if not a.is_square():
        raise MatrixError("determinant of a non-square matrix")
    n = a.rows
    if n == 0:
        return 1
    m = a.to_lists()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if m[i][k]), None)
            if piv is None:
                return 0
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        p = m[k][k]
        for i in range(k + 1, n):
            mi, mk = m[i], m[k]
            f = mi[k]
            for j in range(k + 1, n):
                mi[j] = (p * mi[j] - f * mk[j]) // prev
            mi[k] = 0
        prev = p
    return sign * m[n - 1][n - 1]


def saturate(lat: Sublattice) -> Sublattice:
    """Smallest saturated lattice with the same rational span."""
    n = lat.ambient_rank
    if lat.rank == 0:
        return Sublattice.zero(n)
    left = kernel_basis(lat.basis.T)  # integer vectors orthogonal to the span
    if left.rank == 0:
        return Sublattice.full(n)
    sat = kernel_basis(left.basis.T)
    return Sublattice(n, sat.basis, True)


def integer_solve(a: IntegerMatrix, b: Sequence[int]) -> tuple[int, ...] | None:
    """Some integer x with A·x = b, or None when no integer solution exists."""
    if len(b) != a.rows:
        raise MatrixError("right-hand side has the wrong length")
    h, u = hnf(a)
    return _solve_with_hnf(h, u, b)


def _solve_with_hnf(h: IntegerMatrix, u: IntegerMatrix, b: Sequence[int]) -> tuple[int, ...] | None:
    k = _pivot_count(h)
    y = [0] * h.cols
    resid = list(b)
    j = 0
    for i in range(h.rows):
        if j < k and h[i, j] != 0:
            q, rem = divmod(resid[i], h[i, j])
            if rem:
                return None
            y[j] = q
            if q:
                col = h.column(j)
                resid = [r - q * c for r, c in zip(resid, col)]
            j += 1
        elif resid[i]:
            return None
    if any(resid):
        return None
    return u.apply(y)


class LatticeSolver:
    """Reusable integer solver for many right-hand sides against one matrix."""

    def __init__(self, a: IntegerMatrix) -> None:
        self.matrix = a
        self._h, self._u = hnf(a)

    def solve(self, b: Sequence[int]) -> tuple[int, ...] | None:
        if len(b) != self.matrix.rows:
            raise MatrixError("right-hand side has the wrong length")
        return _solve_with_hnf(self._h, self._u, b)


def rational_solve(a: IntegerMatrix, b: Sequence[Fraction | int]) -> tuple[Fraction, ...] | None:
    """Some rational x with A·x = b (free variables set to 0), or None."""
    m, n = a.rows, a.cols
    if len(b) != m:
        raise MatrixError("right-hand side has the wrong length")
    aug = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(a.entries, b)]
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        p = aug[r][c]
        aug[r] = [x / p for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    if any(aug[i][n] != 0 for i in range(r, m)):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][n]
    return tuple(x)


# ---------------------------------------------------------------------------
# quotients


@dataclass(frozen=True)
class QuotientStructure:
    free_rank: int
    invariant_factors: tuple[int, ...] = ()

    @property
    def torsion_free(self) -> bool:
        return not self.invariant_factors


def quotient_structure(m: Sublattice, l: Sublattice) -> QuotientStructure:
    """Structure of L/M for sublattices M ⊆ L of the same ambient lattice."""
    if m.ambient_rank != l.ambient_rank:
        raise MatrixError("sublattices live in different ambient lattices")
    solver = LatticeSolver(l.basis)
    coords = []
    for c in m.basis.columns():
        x = solver.solve(c)
        if x is None:
            raise MatrixError("containment violated: M is not a sublattice of L")
        coords.append(x)
    if not coords:
        return QuotientStructure(l.rank, ())
    c = IntegerMatrix.from_columns(coords, l.rank)
    factors = snf(c).invariant_factors
    nonzero = [d for d in factors if d]
    return QuotientStructure(l.rank - len(nonzero), tuple(d for d in nonzero if d > 1))


# ---------------------------------------------------------------------------
# characteristic polynomial and integer spectrum


def char_poly(a: IntegerMatrix) -> list[int]:
    """Coefficients of det(xI − A), highest degree first.

    Faddeev–LeVerrier; every division is exact over the integers.
    """
    if not a.is_square():
        raise MatrixError("characteristic polynomial of a non-square matrix")
    n = a.rows
    coeffs = [1]
    rows = a.to_lists()
    m = [[0] * n for _ in range(n)]  # M_0 = 0
    c = 1
    for k in range(1, n + 1):
        # M_k = A·M_{k-1} + c_{n-k+1}·I
        mcols = list(zip(*m))
        new = [[sum(x * y for x, y in zip(r, col)) for col in mcols] for r in rows]
        for i in range(n):
            new[i][i] += c
        m = new
        # tr(A·M_k)
        tr = sum(sum(x * y for x, y in zip(rows[i], (m[j][i] for j in range(n)))) for i in range(n))
        c, rem = divmod(-tr, k)
        if rem:
            raise ArithmeticError("inexact division in characteristic polynomial")
        coeffs.append(c)
    return coeffs


def _poly_eval(p: Sequence[int], x: int) -> int:
    acc = 0
    for c in p:
        acc = acc * x + c
    return acc


def _synthetic_div(p: Sequence[int], x: int) -> list[int]:
    """Quotient of p by (X − x); caller guarantees exactness."""
    out = [p[0]]
    for c in p[1:-1]:
        out.append(c + out[-1] * x)
    return out


def _root_bound(a: IntegerMatrix) -> int:
    if a.rows == 0:
        return 0
    rowsum = max(sum(abs(x) for x in r) for r in a.entries)
    colsum = max(sum(abs(x) for x in c) for c in a.columns())
    return min(rowsum, colsum)


@dataclass(frozen=True)
class EigenData:
    eigenvalue: int
    algebraic_multiplicity: int
    geometric_multiplicity: int
    eigenlattice: Sublattice


@dataclass(frozen=True)
class Spectrum:
    """Integer part of the spectrum plus the leftover factor of the characteristic polynomial."""

    eigen: tuple[EigenData, ...]
    char_poly: tuple[int, ...]
    residual_factor: tuple[int, ...]

    @property
    def has_non_integer_eigenvalues(self) -> bool:
        return len(self.residual_factor) > 1

    def __iter__(self):
        return iter(self.eigen)

    def __len__(self) -> int:
        return len(self.eigen)

    def by_value(self) -> dict[int, EigenData]:
        return {e.eigenvalue: e for e in self.eigen}

    def multiplicities(self) -> dict[int, tuple[int, int]]:
        return {e.eigenvalue: (e.algebraic_multiplicity, e.geometric_multiplicity) for e in self.eigen}


def integer_roots(poly: Sequence[int], bound: int | None = None) -> tuple[dict[int, int], list[int]]:
    """Integer roots with multiplicity, and the cofactor with no integer roots.

    Candidates are divisors of the lowest nonzero coefficient; ``bound``
    (e.g. a Gershgorin radius) restricts the search when known.
    """
    p = list(poly)
    roots: dict[int, int] = {}
    zeros = 0
    while len(p) > 1 and p[-1] == 0:
        p.pop()
        zeros += 1
    if zeros:
        roots[0] = zeros
    if len(p) > 1:
        c0 = abs(p[-1])
        if bound is None:
            bound = c0
        for d in _divisors_up_to(c0, bound):
            for x in (d, -d):
                while len(p) > 1 and _poly_eval(p, x) == 0:
                    p = _synthetic_div(p, x)
                    roots[x] = roots.get(x, 0) + 1
    return roots, p


def _divisors_up_to(n: int, bound: int) -> list[int]:
    if bound < n:
        return [d for d in range(1, bound + 1) if n % d == 0]
    out = set()
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            out.add(d)
            out.add(n // d)
    return sorted(out)


def integer_eigen_data(a: IntegerMatrix) -> Spectrum:
    """Integer eigenvalues (descending) with multiplicities and saturated eigenlattices."""
    cp = char_poly(a)
    roots, rest = integer_roots(cp, _root_bound(a))
    n = a.rows
    eigen = []
    for lam in sorted(roots, reverse=True):
        shifted = a - IntegerMatrix.identity(n).scale(lam)
        lat = kernel_basis(shifted)
        eigen.append(EigenData(lam, roots[lam], lat.rank, lat))
    return Spectrum(tuple(eigen), tuple(cp), tuple(rest))


def generalized_eigenlattice(a: IntegerMatrix, lam: int, multiplicity: int | None = None) -> Sublattice:
    """Saturated lattice ker((A − λ)^m) ∩ Z^n, m the algebraic multiplicity."""
    n = a.rows
    shifted = a - IntegerMatrix.identity(n).scale(lam)
    if multiplicity is None:
        return _stable_kernel(shifted)
    return kernel_basis(shifted ** max(multiplicity, 1)) if multiplicity else Sublattice.zero(n)


def _stable_kernel(a: IntegerMatrix) -> Sublattice:
    """ker(A^k) for k large enough that the rank has stopped dropping."""
    power = a
    current = rank(power)
    while True:
        nxt = power @ a
        r = rank(nxt)
        if r == current:
            return kernel_basis(power)
        power, current = nxt, r


def eventual_kernel(a: IntegerMatrix) -> Sublattice:
    """Saturated generalized kernel of a square matrix."""
    if not a.is_square():
        raise MatrixError("eventual kernel of a non-square matrix")
    if a.rows == 0:
        return Sublattice.zero(0)
    return _stable_kernel(a)


def unimodular_inverse(u: IntegerMatrix) -> IntegerMatrix:
    """Inverse of a square integer matrix with determinant ±1."""
    if not u.is_square():
        raise MatrixError("inverse of a non-square matrix")
    n = u.rows
    solver = LatticeSolver(u)
    cols = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        x = solver.solve(e)
        if x is None:
            raise MatrixError("matrix is not unimodular")
        cols.append(x)
    return IntegerMatrix.from_columns(cols, n)


def poly_of_matrix(coeffs: Sequence[int], a: IntegerMatrix) -> IntegerMatrix:
    """q(A) by Horner's rule, coefficients highest degree first."""
    n = a.rows
    out = IntegerMatrix.zeros(n, n)
    eye = IntegerMatrix.identity(n)
    for c in coeffs:
        out = out @ a + eye.scale(c)
    return out
