"""Direct limits of free abelian groups under an integer endomorphism.

A stationary system Z^n --A--> Z^n --A--> ... is modelled by first killing
the saturated eventual kernel N of A.  On the quotient Z^r = Z^n / N the
induced map A' is injective, and the limit becomes the concrete subgroup

    G = { w in Q^r : A'^k w is integral for some k }

so equality of limit elements is equality of rational vectors.

For classification the limit is written in a *frame*: a basis of Z^r made
of an R-basis of the saturated lattice Λ_D spanned by the generalized
eigenvectors with |λ| ≥ 2 (R = Z[1/p : p | λ]), followed by any integer
complement C of Λ_D.  When A' acts unimodularly off Λ_D this gives

    G = R·Λ_D ⊕ Z·C

even when the eigenlattices themselves only span a finite-index sublattice
whose correction survives in the limit.  Quotients and kernels of maps
between such groups are computed by localizing at one prime at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .intlin import (
    IntegerMatrix,
    LatticeSolver,
    MatrixError,
    Sublattice,
    char_poly,
    column_span,
    det,
    eventual_kernel,
    generalized_eigenlattice,
    integer_roots,
    kernel_basis,
    poly_of_matrix,
    rank,
    rational_solve,
    snf,
    unimodular_inverse,
)

__all__ = [
    "DimGroupError",
    "PresentationOnly",
    "Undecidable",
    "MapError",
    "KernelQuotient",
    "DimensionGroupModel",
    "LimitElement",
    "ClassifiedGroup",
    "SpectralBlock",
    "Decomposition",
    "LimitMap",
    "InducedMapData",
    "KernelReport",
    "PresentedGroup",
    "PresentedMap",
    "limit_group",
    "decompose",
    "contains",
    "classify",
    "generators",
    "embed_stage_vector",
    "limit_map",
    "induced_map_data",
    "presented",
    "cokernel_of",
    "direct_sum",
    "element",
    "radical",
    "strip",
]


class DimGroupError(ValueError):
    """Base class for limit-group failures."""


class PresentationOnly(DimGroupError):
    """The limit could not be put in closed form."""


class Undecidable(DimGroupError):
    """Membership could not be settled within the stabilization bound."""


class MapError(DimGroupError):
    """An integer matrix does not induce a map between the given limits."""


MEMBERSHIP_SLACK = 64


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class KernelQuotient:
    """Z^n modulo the saturated eventual kernel, with explicit coordinates.

    ``projection`` (r × n) and ``section`` (n × r) satisfy
    projection · section = I and projection kills the kernel.
    """

    ambient_rank: int
    eventual_kernel: Sublattice
    projection: IntegerMatrix
    section: IntegerMatrix

    def describe(self) -> str:
        n, k = self.ambient_rank, self.eventual_kernel.rank
        return f"Z^{n} / N with N saturated of rank {k} (quotient Z^{n - k})"


@dataclass(frozen=True)
class DimensionGroupModel:
    matrix: IntegerMatrix
    reduced_rank: int
    kernel_quotient: KernelQuotient
    reduced_map: IntegerMatrix

    @property
    def ambient_rank(self) -> int:
        return self.matrix.rows

    def project(self, v: Sequence[int]) -> tuple[int, ...]:
        return self.kernel_quotient.projection.apply(v)


@dataclass(frozen=True)
class LimitElement:
    vector: tuple[Fraction, ...]
    certificate: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return "(" + ", ".join(str(x) for x in self.vector) + ")"


def limit_group(a: IntegerMatrix) -> DimensionGroupModel:
    """Model of lim(Z^n, A) with the eventual kernel quotiented out."""
    if not a.is_square():
        raise MatrixError("connecting map must be square")
    n = a.rows
    kern = eventual_kernel(a)
    k = kern.rank
    if k == 0:
        proj = sect = IntegerMatrix.identity(n)
    else:
        # U·N·V = [I_k; 0] because N is saturated, so rows k.. of U kill N.
        dec = snf(kern.basis)
        if any(d != 1 for d in dec.invariant_factors[:k]):
            raise MatrixError("eventual kernel is not saturated")
        u_inv = unimodular_inverse(dec.U)
        proj = dec.U.submatrix(list(range(k, n)), slice(None))
        sect = u_inv.submatrix(slice(None), list(range(k, n)))
    reduced = proj @ a @ sect
    quotient = KernelQuotient(n, kern, proj, sect)
    return DimensionGroupModel(a, n - k, quotient, reduced)



# ---------------------------------------------------------------------------
# rings Z[1/c] for squarefree c


def prime_factors(n: int) -> list[int]:
    n = abs(n)
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def radical(n: int) -> int:
    """Product of the distinct primes dividing n (1 for n = 0, ±1)."""
    return math.prod(prime_factors(n)) if n else 1


def strip(d: int, ring: int) -> int:
    """Remove from |d| every prime factor it shares with ``ring``."""
    d = abs(d)
    if ring <= 1 or d == 0:
        return d
    g = math.gcd(d, ring)
    while g > 1:
        d //= g
        g = math.gcd(d, ring)
    return d


def p_part(d: int, p: int) -> int:
    d = abs(d)
    out = 1
    while d and d % p == 0:
        d //= p
        out *= p
    return out


def _valuation(x: int, p: int) -> float:
    if x == 0:
        return math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# rational columns

Col = tuple[Fraction, ...]


def _as_col(v: Iterable) -> Col:
    return tuple(Fraction(x) for x in v)


def _denominator(col: Sequence[Fraction]) -> int:
    return math.lcm(1, *(x.denominator for x in col))


def _scaled(col: Sequence[Fraction], s: int | None = None) -> tuple[int, ...]:
    s = _denominator(col) if s is None else s
    return tuple(int(x * s) for x in col)


def _int_matrix(cols: Sequence[Col], nrows: int) -> IntegerMatrix:
    """Columns each scaled to integers (spans over Q are unchanged)."""
    return IntegerMatrix.from_columns([_scaled(c) for c in cols], nrows)


def _qrank(cols: Sequence[Col], nrows: int) -> int:
    return rank(_int_matrix(cols, nrows)) if cols and nrows else 0


def _restrict(col: Sequence[Fraction], idx: Sequence[int]) -> Col:
    return tuple(col[i] for i in idx)


def _qmul(rows: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Col:
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in rows)


def _apply_q(a: IntegerMatrix, v: Sequence[Fraction]) -> Col:
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a.entries)


def _integral(v: Iterable[Fraction]) -> bool:
    return all(Fraction(x).denominator == 1 for x in v)


# ---------------------------------------------------------------------------
# spectral data and the frame


@dataclass(frozen=True)
class SpectralBlock:
    """Generalized eigenlattice of the reduced map.

    ``eigenvalue`` is None for the part of the spectrum without integer
    roots; ``ring`` is the radical of |λ| (1 means plain Z) or None when that
    part is not unimodular and so has no closed form here.
    """

    eigenvalue: int | None
    basis: IntegerMatrix
    action: IntegerMatrix
    ring: int | None

    @property
    def rank(self) -> int:
        return self.basis.cols


@dataclass(frozen=True)
class Decomposition:
    blocks: tuple[SpectralBlock, ...]
    index_factors: tuple[int, ...]
    eventual_correction: tuple[int, ...]
    exact: bool
    frame: IntegerMatrix | None
    rings: tuple[int, ...]
    eigen_adapted: bool
    notes: tuple[str, ...]
    inverse: tuple[Col, ...] = ()  # rows of frame^{-1}

    def block(self, eigenvalue: int | None) -> SpectralBlock | None:
        return next((b for b in self.blocks if b.eigenvalue == eigenvalue), None)

    def coordinates(self, w: Sequence[Fraction]) -> Col:
        return _qmul(self.inverse, _as_col(w))


def _block_order(b: SpectralBlock) -> tuple:
    lam = b.eigenvalue
    return (lam is None, -abs(lam) if lam is not None else 0, -(lam or 0))


def _action_on(a: IntegerMatrix, basis: IntegerMatrix) -> IntegerMatrix:
    solver = LatticeSolver(basis)
    cols = []
    for c in (a @ basis).columns():
        x = solver.solve(c)
        if x is None:
            raise MatrixError("lattice is not invariant under the map")
        cols.append(x)
    return IntegerMatrix.from_columns(cols, basis.cols)


def _stack(mats: Sequence[IntegerMatrix], nrows: int) -> IntegerMatrix:
    out = IntegerMatrix.zeros(nrows, 0)
    for m in mats:
        out = out.hstack(m)
    return out


def _saturation_index(m: IntegerMatrix) -> int:
    """Index of the column lattice of m in its saturation (m of full column rank)."""
    return math.prod(d for d in snf(m).invariant_factors if d)


def _saturate_cols(m: IntegerMatrix) -> IntegerMatrix:
    n = m.rows
    if m.cols == 0:
        return m
    left = kernel_basis(m.T)
    if left.rank == 0:
        return IntegerMatrix.identity(n)
    return kernel_basis(left.basis.T).basis


def _eventual_correction(a: IntegerMatrix, total: IntegerMatrix) -> tuple[int, ...]:
    """Surviving part of Z^r / span(total) under a (a descending lattice chain)."""
    r = a.rows
    span = column_span(total)
    current = IntegerMatrix.identity(r)
    while True:
        nxt = column_span((a @ current).hstack(total))
        if nxt == current:
            break
        current = nxt
    solver = LatticeSolver(current)
    coords = IntegerMatrix.from_columns([solver.solve(c) for c in span.columns()], current.cols)
    return tuple(d for d in snf(coords).invariant_factors if d > 1)


@lru_cache(maxsize=128)
def decompose(model: DimensionGroupModel) -> Decomposition:
    """Spectral blocks of the reduced map and, when possible, a frame for the limit."""
    a = model.reduced_map
    r = model.reduced_rank
    if r == 0:
        return Decomposition((), (), (), True, IntegerMatrix.zeros(0, 0), (), True, ())
    cp = char_poly(a)
    bound = max(max(sum(abs(x) for x in row) for row in a.entries), 1)
    roots, rest = integer_roots(cp, bound)
    blocks = []
    for lam in roots:
        lat = generalized_eigenlattice(a, lam)
        act = _action_on(a, lat.basis)
        blocks.append(SpectralBlock(lam, lat.basis, act, radical(lam)))
    if len(rest) > 1:
        lat = kernel_basis(poly_of_matrix(rest, a))
        act = _action_on(a, lat.basis)
        blocks.append(SpectralBlock(None, lat.basis, act, 1 if abs(det(act)) == 1 else None))
    blocks.sort(key=_block_order)
    total = _stack([b.basis for b in blocks], r)
    if total.cols != r:
        raise MatrixError("generalized eigenlattices do not span the reduced lattice")
    index = tuple(d for d in snf(total).invariant_factors if d > 1)
    correction = _eventual_correction(a, total) if index else ()

    notes: list[str] = []
    exact = True
    if any(b.ring is None for b in blocks):
        exact = False
        notes.append("part of the spectrum is irrational and not unimodular")
    classes: dict[int, list[SpectralBlock]] = {}
    for b in blocks:
        if b.ring not in (None, 1):
            classes.setdefault(b.ring, []).append(b)
    if len(classes) > 1:
        rads = list(classes)
        if any(math.gcd(x, y) > 1 for i, x in enumerate(rads) for y in rads[i + 1 :]):
            exact = False
            notes.append("eigenvalues with overlapping but different prime sets")
    segments, rings = [], []
    adapted = True
    lam_d = []
    for c, bl in classes.items():
        eig = _stack([b.basis for b in bl], r)
        sat = _saturate_cols(eig)
        lam_d.append(sat)
        if strip(_saturation_index(eig), c) == 1:
            segments.append(eig)
        else:
            adapted = False
            segments.append(sat)
        rings.extend([c] * eig.cols)
    d_all = _stack(lam_d, r)
    if len(classes) > 1 and _saturation_index(d_all) != 1 and exact:
        exact = False
        notes.append("lattices of different dyadic classes are glued by a finite correction")
    if not exact:
        return Decomposition(tuple(blocks), index, correction, False, None, (), False, tuple(notes))

    k = d_all.cols
    if k:
        dec = snf(d_all)
        complement = unimodular_inverse(dec.U).submatrix(slice(None), list(range(k, r)))
    else:
        complement = IntegerMatrix.identity(r)
    frame = _stack(segments + [complement], r)
    rings.extend([1] * (r - k))

    # Perron generator: the projected all-ones vector, when it spans the top block.
    if adapted and classes:
        top = blocks[0]
        ones = model.project([1] * model.ambient_rank)
        if top.ring not in (None, 1) and top.rank == 1:
            x = rational_solve(top.basis, ones)
            if x is not None and x[0] != 0:
                t = x[0]
                if strip(t.numerator, top.ring) == 1 and strip(t.denominator, top.ring) == 1:
                    cols = frame.columns()
                    cols[0] = ones
                    frame = IntegerMatrix.from_columns(cols, r)
    inv_cols = [rational_solve(frame, e) for e in IntegerMatrix.identity(r).columns()]
    inverse = tuple(tuple(col[i] for col in inv_cols) for i in range(r))
    if correction:
        notes.append(
            "eigenlattices span a sublattice whose correction "
            + ", ".join(f"Z/{d}" for d in correction)
            + " survives in the limit; the frame uses an integer complement instead"
        )
    return Decomposition(
        tuple(blocks), index, correction, True, frame, tuple(rings), adapted, tuple(notes), inverse
    )


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassifiedGroup:
    """Formal sum ⊕ Z[1/λ]^m ⊕ Z^k ⊕ torsion."""

    dyadic_parts: tuple[tuple[int, int], ...] = ()
    free_rank: int = 0
    torsion: tuple[int, ...] = ()
    exact: bool = True
    notes: tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def build(
        cls,
        parts: Iterable[tuple[int, int]],
        torsion: Iterable[int] = (),
        exact: bool = True,
        notes: Iterable[str] = (),
    ) -> "ClassifiedGroup":
        """Normalize (λ, multiplicity) summands; λ = 1 stands for Z."""
        dyad: dict[int, int] = {}
        free = 0
        for lam, m in parts:
            lam = abs(lam)
            if m == 0:
                continue
            if lam <= 1:
                free += m
            else:
                dyad[lam] = dyad.get(lam, 0) + m
        return cls(
            tuple(sorted(dyad.items(), reverse=True)),
            free,
            _normalize_torsion(torsion),
            exact,
            tuple(notes),
        )

    @property
    def is_zero(self) -> bool:
        return not self.dyadic_parts and not self.free_rank and not self.torsion

    @property
    def is_free(self) -> bool:
        """Free abelian: no divisible summands and no torsion."""
        return not self.dyadic_parts and not self.torsion

    @property
    def rank(self) -> int:
        return self.free_rank + sum(m for _, m in self.dyadic_parts)

    def to_json(self) -> dict:
        out = {
            "dyadic": [[lam, m] for lam, m in self.dyadic_parts],
            "free_rank": self.free_rank,
            "torsion": list(self.torsion),
            "exact": self.exact,
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "ClassifiedGroup":
        return cls(
            tuple((int(a), int(b)) for a, b in doc.get("dyadic", [])),
            int(doc.get("free_rank", 0)),
            _normalize_torsion(doc.get("torsion", [])),
            bool(doc.get("exact", True)),
        )

    def __str__(self) -> str:
        terms = [f"Z[1/{lam}]" + (f"^{m}" if m > 1 else "") for lam, m in self.dyadic_parts]
        if self.free_rank:
            terms.append("Z" + (f"^{self.free_rank}" if self.free_rank > 1 else ""))
        terms.extend(f"Z/{d}" for d in self.torsion)
        text = " (+) ".join(terms) if terms else "0"
        return text if self.exact else text + " [presentation only]"

    @classmethod
    def parse(cls, text: str) -> "ClassifiedGroup":
        """Inverse of ``str`` for exact groups, e.g. ``Z[1/4] (+) Z^2``."""
        text = text.strip()
        if text == "0":
            return cls()
        parts: list[tuple[int, int]] = []
        torsion: list[int] = []
        for term in text.replace("⊕", "(+)").split("(+)"):
            term = term.strip()
            base, _, exp = term.partition("^")
            m = int(exp) if exp else 1
            if base == "Z":
                parts.append((1, m))
            elif base.startswith("Z[1/") and base.endswith("]"):
                parts.append((int(base[4:-1]), m))
            elif base.startswith("Z/"):
                torsion.extend([int(base[2:])] * m)
            else:
                raise ValueError(f"cannot parse group term {term!r}")
        return cls.build(parts, torsion)


def _normalize_torsion(ds: Iterable[int]) -> tuple[int, ...]:
    ds = [abs(int(d)) for d in ds if abs(int(d)) > 1]
    if not ds:
        return ()
    return tuple(d for d in snf(IntegerMatrix.diagonal(ds)).invariant_factors if d > 1)


def direct_sum(*groups: ClassifiedGroup) -> ClassifiedGroup:
    parts: list[tuple[int, int]] = []
    torsion: list[int] = []
    notes: list[str] = []
    for g in groups:
        parts.extend(g.dyadic_parts)
        parts.append((1, g.free_rank))
        torsion.extend(g.torsion)
        notes.extend(g.notes)
    return ClassifiedGroup.build(parts, torsion, all(g.exact for g in groups), notes)


def _assemble(
    rank_total: int,
    divisible: dict[int, int],
    eigen_dims: Sequence[tuple[int | None, int]],
    torsion: Sequence[int],
    exact: bool,
    notes: list[str],
) -> ClassifiedGroup:
    """Turn ranks per ring into a formal sum labelled by eigenvalues."""
    free = rank_total - sum(divisible.values())
    parts: list[tuple[int, int]] = []
    labelled = bool(eigen_dims)
    if labelled:
        if sum(d for _, d in eigen_dims) != rank_total:
            labelled = False
        else:
            by_ring: dict[int, int] = {}
            unit = 0
            for lam, d in eigen_dims:
                ring = 1 if lam is None else radical(lam)
                if ring == 1:
                    unit += d
                else:
                    by_ring[ring] = by_ring.get(ring, 0) + d
            if unit != free or any(by_ring.get(c, 0) != m for c, m in divisible.items() if m):
                labelled = False
        if not labelled:
            notes.append("eigenvalue labels do not match the divisible ranks")
            exact = False
    if labelled:
        parts = [(lam if lam is not None else 1, d) for lam, d in eigen_dims]
    else:
        parts = [(c, m) for c, m in divisible.items()] + [(1, free)]
    return ClassifiedGroup.build(parts, torsion, exact, notes)


def classify(model: DimensionGroupModel) -> ClassifiedGroup:
    dec = decompose(model)
    if not dec.exact:
        return ClassifiedGroup.build(
            ((b.eigenvalue if b.ring not in (None, 1) else 1, b.rank) for b in dec.blocks),
            (),
            False,
            dec.notes,
        )
    g = presented(model).classify()
    return ClassifiedGroup(g.dyadic_parts, g.free_rank, g.torsion, g.exact, g.notes + dec.notes)


# ---------------------------------------------------------------------------
# elements


def _smallest_certificate(a: IntegerMatrix, w: Sequence[Fraction], limit: int | None) -> int | None:
    k = 0
    cur = _as_col(w)
    while not _integral(cur):
        if limit is not None and k >= limit:
            return None
        cur = _apply_q(a, cur)
        k += 1
    return k


def _in_frame(dec: Decomposition, w: Sequence[Fraction]) -> bool:
    x = dec.coordinates(w)
    return all(strip(xi.denominator, ring) == 1 for xi, ring in zip(x, dec.rings))


def contains(model: DimensionGroupModel, w: Sequence[Fraction | int]) -> int | None:
    """Smallest k with reduced_map^k · w integral, or None if w is outside the limit."""
    r = model.reduced_rank
    if len(w) != r:
        raise MatrixError(f"expected a vector of length {r}")
    w = _as_col(w)
    a = model.reduced_map
    dec = decompose(model)
    if dec.exact:
        if not _in_frame(dec, w):
            return None
        return _smallest_certificate(a, w, None)
    k = _smallest_certificate(a, w, r + MEMBERSHIP_SLACK)
    if k is not None:
        return k
    d = abs(det(a))
    if any(strip(x.denominator, d) > 1 for x in w):
        return None
    raise Undecidable(f"membership not settled after {r + MEMBERSHIP_SLACK} steps")


def element(model: DimensionGroupModel, w: Sequence[Fraction | int]) -> LimitElement:
    """Wrap a rational vector after checking membership."""
    k = contains(model, w)
    if k is None:
        raise DimGroupError("vector is not in the limit group")
    return LimitElement(_as_col(w), k)


def embed_stage_vector(model: DimensionGroupModel, v: Sequence[int], stage: int = 0) -> LimitElement:
    """The limit element represented by v sitting at the given stage."""
    if len(v) != model.ambient_rank:
        raise MatrixError(f"expected a vector of length {model.ambient_rank}")
    if stage < 0:
        raise ValueError("stage must be nonnegative")
    p = model.project(v)
    if stage == 0:
        return LimitElement(_as_col(p), 0)
    w = rational_solve(model.reduced_map ** stage, p)
    if w is None:  # impossible for an injective reduced map
        raise MatrixError("reduced map is not injective")
    return LimitElement(w, _smallest_certificate(model.reduced_map, w, stage))


def generators(model: DimensionGroupModel) -> list[LimitElement]:
    """One generator per summand of ``classify(model)``, in the same order.

    The divisible summands come first (eigenvalue order, with the projected
    all-ones vector for the top eigenvalue when it spans that eigenlattice),
    then a basis of the integer complement.
    """
    dec = decompose(model)
    if not dec.exact:
        raise PresentationOnly("limit group has no closed form")
    return [LimitElement(_as_col(c), 0) for c in dec.frame.columns()]


# ---------------------------------------------------------------------------
# presented groups: (⊕ R_c^{g_c} ⊕ Z^b) / relations


@dataclass(frozen=True)
class PresentedGroup:
    """Quotient of a free mixed module by explicit relations.

    Generator i generates a copy of Z[1/rings[i]] (plain Z when the ring is 1).
    Each relation is a rational column together with the ring of its
    coefficients: relations over Z[1/c] may only involve generators of ring
    c, relations over Z may involve anything.  ``eigen`` lists generalized
    eigenspaces in generator coordinates and is used only for labelling.
    """

    rings: tuple[int, ...]
    relations: tuple[tuple[Col, int], ...] = ()
    eigen: tuple[tuple[int | None, tuple[Col, ...]], ...] = ()
    frame: IntegerMatrix | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        g = len(self.rings)
        for col, ring in self.relations:
            if len(col) != g:
                raise MapError("relation has the wrong length")
            for x, rg in zip(col, self.rings):
                if x == 0:
                    continue
                if ring != 1 and rg != ring:
                    raise MapError("ring relation involves generators of another ring")
                if strip(x.denominator, rg) != 1:
                    raise MapError("relation coefficient outside the generator ring")

    @property
    def size(self) -> int:
        return len(self.rings)

    @property
    def relation_columns(self) -> list[Col]:
        return [c for c, _ in self.relations]

    def with_relations(self, extra: Iterable[tuple[Col, int]]) -> "PresentedGroup":
        return PresentedGroup(self.rings, self.relations + tuple(extra), self.eigen, self.frame)

    def primes(self) -> list[int]:
        return sorted({p for r in set(self.rings) for p in prime_factors(r)})

    def _local(self, p: int):
        """Split generators and relations for localization at p."""
        div = [i for i, r in enumerate(self.rings) if r % p == 0]
        rest = [i for i, r in enumerate(self.rings) if r % p != 0]
        xs = [c for c, ring in self.relations if ring % p == 0 and ring != 1]
        ws = [c for c, ring in self.relations if not (ring % p == 0 and ring != 1)]
        w_rest, w_div = [], []
        for c in ws:
            cr = _restrict(c, rest)
            s = _denominator(cr)
            if s % p == 0:
                raise MapError("relation denominator is not a unit at p")
            w_rest.append(_scaled(cr, s))
            w_div.append(tuple(x * s for x in _restrict(c, div)))
        x_div = [_restrict(c, div) for c in xs]
        return div, rest, x_div, w_rest, w_div

    def classify(self) -> ClassifiedGroup:
        g = self.size
        rels = self.relation_columns
        n = g - _qrank(rels, g)
        notes: list[str] = []
        exact = True
        primes = self.primes()
        pi = math.prod(primes)
        torsion: list[int] = []
        if rels:
            m = IntegerMatrix.from_columns([_scaled(c) for c in rels], g)
            torsion.extend(strip(d, pi) for d in snf(m).invariant_factors if d)
        radicals = sorted({r for r in self.rings if r != 1})
        divisible: dict[int, int] = {}
        for p in primes:
            div, rest, x_div, w_rest, w_div = self._local(p)
            wr = IntegerMatrix.from_columns(w_rest, len(rest))
            if w_rest and not self._prufer_free(wr, w_div, x_div, len(div)):
                exact = False
                notes.append(f"quotient has a divisible torsion part at the prime {p}")
            beta = len(rest) - (rank(wr) if w_rest and rest else 0)
            if w_rest and rest:
                torsion.extend(p_part(d, p) for d in snf(wr).invariant_factors if d)
            alpha = n - beta
            for c in radicals:
                if c % p == 0:
                    if c in divisible and divisible[c] != alpha:
                        exact = False
                        notes.append("divisible rank depends on the prime")
                    divisible[c] = alpha
        if len(radicals) > 1 and any(
            ring == 1 and any(x for x, r in zip(col, self.rings) if r != 1) for col, ring in self.relations
        ):
            exact = False
            notes.append("integer relations glue different divisible classes")
        dims = self.eigen_dims()
        return _assemble(n, divisible, dims, torsion, exact, notes)

    @staticmethod
    def _prufer_free(wr: IntegerMatrix, w_div: list[Col], x_div: list[Col], ndiv: int) -> bool:
        """Integer relations vanishing off the divisible part must be divisible relations."""
        if ndiv == 0:
            return True
        k = kernel_basis(wr)
        if k.rank == 0:
            return True
        base = _qrank(x_div, ndiv)
        for kc in k.basis.columns():
            v = tuple(sum((col[i] * kc[j] for j, col in enumerate(w_div)), Fraction(0)) for i in range(ndiv))
            if any(v) and _qrank(x_div + [v], ndiv) != base:
                return False
        return True

    def eigen_dims(self) -> list[tuple[int | None, int]]:
        if not self.eigen:
            return []
        g = self.size
        rels = self.relation_columns
        rr = _qrank(rels, g)
        out = []
        for lam, cols in self.eigen:
            e = _qrank(list(cols), g)
            meet = rr + e - _qrank(rels + list(cols), g)
            out.append((lam, e - meet))
        return out

    def contains_relation(self, v: Sequence[Fraction]) -> bool:
        """Whether v lies in the relation submodule (so is zero in the quotient)."""
        v = _as_col(v)
        g = self.size
        if not any(v):
            return True
        rels = self.relation_columns
        if not rels:
            return False
        primes = self.primes()
        pi = math.prod(primes)
        # away from the ring primes every ring is Z locally
        m = IntegerMatrix.from_columns([_scaled(c) for c in rels], g)
        if not _in_ring_span(pi, m, _scaled(v)):
            return False
        for p in primes:
            div, rest, x_div, w_rest, w_div = self._local(p)
            vr = _restrict(v, rest)
            s = _denominator(vr)
            if s % p == 0:
                return False
            vr_int = _scaled(vr, s)
            vd = tuple(x * s for x in _restrict(v, div))
            if w_rest and rest:
                wr = IntegerMatrix.from_columns(w_rest, len(rest))
                if not _in_local_span(p, wr, vr_int):
                    return False
                b = rational_solve(wr, vr_int)
                if b is None:
                    return False
                resid = tuple(
                    vd[i] - sum((col[i] * bj for col, bj in zip(w_div, b)), Fraction(0)) for i in range(len(div))
                )
            else:
                if any(vr_int):
                    return False
                resid = vd
            if any(resid) and _qrank(x_div + [resid], len(div)) != _qrank(x_div, len(div)):
                return False
        return True


def _in_ring_span(ring: int, basis: IntegerMatrix, x: Sequence[int]) -> bool:
    """x ∈ Z[1/ring]·span(basis) for an integer matrix and vector."""
    if basis.cols == 0:
        return not any(x)
    dec = snf(basis)
    y = dec.U.apply(x)
    d = dec.D.diagonal_entries()
    for i, yi in enumerate(y):
        di = d[i] if i < len(d) else 0
        if di == 0:
            if yi:
                return False
        elif strip(di // math.gcd(di, yi), ring) != 1:
            return False
    return True


def _in_local_span(p: int, basis: IntegerMatrix, x: Sequence[int]) -> bool:
    """x in the Z_(p)-span of the columns of basis."""
    if basis.cols == 0:
        return not any(x)
    dec = snf(basis)
    y = dec.U.apply(x)
    d = dec.D.diagonal_entries()
    for i, yi in enumerate(y):
        di = d[i] if i < len(d) else 0
        if di == 0:
            if yi:
                return False
        elif _valuation(yi, p) < _valuation(di, p):
            return False
    return True


def presented(model: DimensionGroupModel) -> PresentedGroup:
    """The limit of a model as a presented group in its frame."""
    dec = decompose(model)
    if not dec.exact:
        raise PresentationOnly("limit group has no closed form")
    eigen = tuple(
        (b.eigenvalue, tuple(dec.coordinates(c) for c in b.basis.columns())) for b in dec.blocks
    )
    return PresentedGroup(dec.rings, (), eigen, dec.frame)


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class KernelReport:
    group: ClassifiedGroup
    generators: tuple[Col, ...]  # integer spanning vectors in source generator coordinates


@dataclass(frozen=True)
class PresentedMap:
    """A homomorphism given by the images of the source generators."""

    source: PresentedGroup
    target: PresentedGroup
    images: tuple[Col, ...]

    def __post_init__(self) -> None:
        if len(self.images) != self.source.size:
            raise MapError("one image per source generator is required")
        for col, ring in zip(self.images, self.source.rings):
            if len(col) != self.target.size:
                raise MapError("image has the wrong length")
            for x, rg in zip(col, self.target.rings):
                if x == 0:
                    continue
                if ring != 1 and rg != ring:
                    raise MapError("divisible generator mapped outside its ring class")
                if strip(x.denominator, rg) != 1:
                    raise MapError("image coefficient outside the target ring")
        for rel, _ in self.source.relations:
            if not self.target.contains_relation(self.apply(rel)):
                raise MapError("source relations are not sent to target relations")

    def apply(self, x: Sequence[Fraction]) -> Col:
        out = [Fraction(0)] * self.target.size
        for xi, col in zip(x, self.images):
            if xi:
                for i, c in enumerate(col):
                    out[i] += xi * c
        return tuple(out)

    def image_rank(self) -> int:
        g = self.target.size
        rels = self.target.relation_columns
        return _qrank(list(self.images) + rels, g) - _qrank(rels, g)

    def cokernel(self) -> PresentedGroup:
        return self.target.with_relations(zip(self.images, self.source.rings))

    def kernel(self) -> KernelReport:
        src, tgt = self.source, self.target
        g1, g2 = src.size, tgt.size
        rel1, rel2 = src.relation_columns, tgt.relation_columns
        r2 = _qrank(rel2, g2)
        pre = g1 - (_qrank(list(self.images) + rel2, g2) - r2)
        n = pre - _qrank(rel1, g1)
        notes: list[str] = []
        exact = True
        if src.classify().torsion:
            exact = False
            notes.append("source has torsion; the kernel's torsion is not computed")
        divisible: dict[int, int] = {}
        for c in sorted({r for r in src.rings if r != 1}):
            p = prime_factors(c)[0]
            d1, _, x1, _, _ = src._local(p)
            d2, _, x2, _, _ = tgt._local(p)
            t_dd = [_restrict(self.images[j], d2) for j in d1]
            rx2 = _qrank(x2, len(d2))
            pre_d = len(d1) - (_qrank(t_dd + x2, len(d2)) - rx2)
            divisible[c] = pre_d - _qrank(x1, len(d1))
        dims = []
        for lam, cols in src.eigen:
            cols = list(cols)
            e = _qrank(cols, g1)
            te = [self.apply(c) for c in cols]
            pre_l = e - (_qrank(te + rel2, g2) - r2)
            meet = _qrank(rel1, g1) + e - _qrank(rel1 + cols, g1)
            dims.append((lam, pre_l - meet))
        group = _assemble(n, divisible, dims, (), exact, notes)
        # integer vectors spanning the preimage of the target relations
        cols = list(self.images) + rel2
        den = math.lcm(1, *(_denominator(c) for c in cols)) if cols else 1
        big = IntegerMatrix.from_columns([_scaled(c, den) for c in cols], g2) if cols else None
        gens: list[Col] = []
        if big is not None:
            k = kernel_basis(big)
            if k.rank:
                head = k.basis.submatrix(list(range(g1)), slice(None))
                if not head.is_zero():
                    gens = [_as_col(c) for c in column_span(head).columns()]
        elif g1:
            gens = [_as_col(c) for c in IntegerMatrix.identity(g1).columns()]
        return KernelReport(group, tuple(gens))


@dataclass(frozen=True)
class LimitMap:
    source: DimensionGroupModel
    target: DimensionGroupModel
    ambient: IntegerMatrix
    reduced: IntegerMatrix

    def apply(self, w: Sequence[Fraction]) -> Col:
        return _apply_q(self.reduced, w)

    def presented(self) -> PresentedMap:
        sdec, tdec = decompose(self.source), decompose(self.target)
        if not (sdec.exact and tdec.exact):
            raise PresentationOnly("map between limits without closed form")
        images = tuple(tdec.coordinates(self.apply(_as_col(c))) for c in sdec.frame.columns())
        return PresentedMap(presented(self.source), presented(self.target), images)


def limit_map(src: DimensionGroupModel, f: IntegerMatrix, tgt: DimensionGroupModel) -> LimitMap:
    """The map of limits induced by an integer matrix f (target × source)."""
    if f.shape != (tgt.ambient_rank, src.ambient_rank):
        raise MapError(f"map has shape {f.shape}, expected {(tgt.ambient_rank, src.ambient_rank)}")
    pt = tgt.kernel_quotient.projection
    if not (pt @ f @ src.kernel_quotient.eventual_kernel.basis).is_zero():
        raise MapError("map does not send the eventual kernel into the eventual kernel")
    red = pt @ f @ src.kernel_quotient.section
    if red @ src.reduced_map != tgt.reduced_map @ red:
        raise MapError("map does not commute with the connecting maps")
    return LimitMap(src, tgt, f, red)


@dataclass(frozen=True)
class InducedMapData:
    images: tuple[LimitElement, ...]
    image_rank: int
    cokernel: ClassifiedGroup
    kernel: ClassifiedGroup
    kernel_generators: tuple[LimitElement, ...]
    map: LimitMap
    presented: PresentedMap


def induced_map_data(
    src: DimensionGroupModel,
    f: IntegerMatrix,
    tgt: DimensionGroupModel,
    src_generators: Sequence[LimitElement] | None = None,
) -> InducedMapData:
    lm = limit_map(src, f, tgt)
    if src_generators is None:
        src_generators = generators(src)
    images = []
    for g in src_generators:
        w = lm.apply(g.vector)
        k = contains(tgt, w)
        if k is None:
            raise MapError("image of a generator left the target limit")
        images.append(LimitElement(w, k))
    pm = lm.presented()
    kern = pm.kernel()
    frame = decompose(src).frame
    kgens = tuple(LimitElement(_qmul(frame.entries, c), 0) for c in kern.generators)
    return InducedMapData(
        tuple(images), pm.image_rank(), pm.cokernel().classify(), kern.group, kgens, lm, pm
    )


def cokernel_of(lm: LimitMap) -> PresentedGroup:
    """Target limit modulo the image of the map, kept as a presentation."""
    return lm.presented().cokernel()
