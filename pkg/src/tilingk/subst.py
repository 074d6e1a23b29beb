"""Square substitution systems: supertiles, border forcing, edges and vertex stars.

Geometry: every prototile is a unit square; the substitution inflates by 2
and replaces a tile by a 2×2 block ``block[col][row]`` with ``(0, 0)`` at
the south-west. The rotation ``r`` is the counter-clockwise quarter turn; on
labels it acts by ``(base, k, dec) -> (base, k + 1 mod order, dec)``.

A tile's *undecorated class* is its ``(base, rotation)`` pair. Decorations
are opaque labels refining those classes.

Legal patches are computed by iterating the substitution on 2×2 windows
until the set of windows stops changing; this fixed point is what the
``order`` bound of the public functions refers to.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema

from .intlin import IntegerMatrix

__all__ = [
    "Prototile",
    "Patch",
    "SubstitutionSystem",
    "EdgeType",
    "VertexStar",
    "AdjacencyTable",
    "ForcingReport",
    "SystemError_",
    "SchemaViolation",
    "EquivarianceViolation",
    "ForcingAbsent",
    "NotStabilized",
    "NotPrimitive",
    "load_system",
    "bundled_system",
    "substitute_patch",
    "supertile",
    "abelianization_matrix",
    "is_primitive",
    "legal_windows",
    "patch_complexity",
    "check_border_forcing",
    "derive_edge_types",
    "edge_reflection",
    "derive_vertex_stars",
    "derive_adjacency",
    "collared_system",
    "patch_to_json",
    "patch_to_svg",
    "DEFAULT_ORDER",
]

DEFAULT_ORDER = 6


class SystemError_(ValueError):
    """Base class for problems with a substitution system."""


class SchemaViolation(SystemError_):
    pass


class EquivarianceViolation(SystemError_):
    pass


class ForcingAbsent(SystemError_):
    pass


class NotStabilized(SystemError_):
    pass


class NotPrimitive(SystemError_):
    pass


class DerivationError(SystemError_):
    """The geometric data does not support an exact edge or vertex model."""


# ---------------------------------------------------------------------------
# data model

_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["name", "rotation_order", "prototiles", "rule"],
    "properties": {
        "name": {"type": "string"},
        "rotation_order": {"enum": [1, 2, 4]},
        "prototiles": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "base", "rotation", "decoration"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "base": {"type": "string", "minLength": 1},
                    "rotation": {"type": "integer", "minimum": 0, "maximum": 3},
                    "decoration": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "rule": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "string"}},
            },
        },
        "labels": {
            "type": "object",
            "properties": {
                "edges": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "string"},
                    },
                },
                "vertices": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "array",
                        "minItems": 4,
                        "maxItems": 4,
                        "items": {
                            "type": "array",
                            "prefixItems": [{"type": "string"}, {"type": "integer"}],
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Prototile:
    id: str
    base: str
    rotation: int
    decoration: str

    @property
    def undecorated(self) -> tuple[str, int]:
        return (self.base, self.rotation)


Block = tuple[tuple[str, str], tuple[str, str]]  # block[col][row]


@dataclass(frozen=True)
class SubstitutionSystem:
    name: str
    rotation_order: int
    prototiles: tuple[Prototile, ...]
    rule: tuple[Block, ...]  # aligned with prototiles
    edge_labels: tuple[tuple[str, str, str], ...] = ()  # (label, below/left id, above/right id)
    vertex_labels: tuple[tuple[str, tuple[tuple[str, int], ...]], ...] = ()

    # -- lookups ----------------------------------------------------------
    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.prototiles)

    @property
    def size(self) -> int:
        return len(self.prototiles)

    def index(self, tile_id: str) -> int:
        return _index_map(self)[tile_id]

    def tile(self, tile_id: str) -> Prototile:
        return self.prototiles[self.index(tile_id)]

    def block(self, tile_id: str) -> Block:
        return self.rule[self.index(tile_id)]

    def rotate(self, tile_id: str, times: int = 1) -> str:
        """Label of r^times · t."""
        t = self.tile(tile_id)
        key = (t.base, (t.rotation + times) % self.rotation_order, t.decoration)
        return _by_triple(self)[key]

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "name": self.name,
            "rotation_order": self.rotation_order,
            "prototiles": [
                {"id": t.id, "base": t.base, "rotation": t.rotation, "decoration": t.decoration}
                for t in self.prototiles
            ],
            "rule": {t.id: [list(col) for col in blk] for t, blk in zip(self.prototiles, self.rule)},
        }
        labels: dict[str, Any] = {}
        if self.edge_labels:
            labels["edges"] = {name: [a, b] for name, a, b in self.edge_labels}
        if self.vertex_labels:
            labels["vertices"] = {name: [list(q) for q in quad] for name, quad in self.vertex_labels}
        if labels:
            doc["labels"] = labels
        return doc


@lru_cache(maxsize=None)
def _index_map(sys: SubstitutionSystem) -> dict[str, int]:
    return {t.id: i for i, t in enumerate(sys.prototiles)}


@lru_cache(maxsize=None)
def _by_triple(sys: SubstitutionSystem) -> dict[tuple[str, int, str], str]:
    return {(t.base, t.rotation, t.decoration): t.id for t in sys.prototiles}


@dataclass(frozen=True)
class Patch:
    """Finite map from unit-square coordinates (col, row) to prototile ids."""

    tiles: tuple[tuple[tuple[int, int], str], ...]

    @classmethod
    def from_mapping(cls, m: Mapping[tuple[int, int], str]) -> "Patch":
        return cls(tuple(sorted(m.items())))

    @classmethod
    def single(cls, tile_id: str) -> "Patch":
        return cls((((0, 0), tile_id),))

    def as_dict(self) -> dict[tuple[int, int], str]:
        return dict(self.tiles)

    def counts(self, sys: SubstitutionSystem) -> list[int]:
        out = [0] * sys.size
        for _, t in self.tiles:
            out[sys.index(t)] += 1
        return out

    def bounds(self) -> tuple[int, int, int, int]:
        xs = [p[0] for p, _ in self.tiles]
        ys = [p[1] for p, _ in self.tiles]
        return min(xs), min(ys), max(xs), max(ys)

    def __len__(self) -> int:
        return len(self.tiles)


# ---------------------------------------------------------------------------
# loading


def load_system(description: Any) -> SubstitutionSystem:
    """Validate a system-definition document (dict, JSON text or file path)."""
    doc = _read_document(description)
    try:
        jsonschema.validate(doc, _SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaViolation(f"schema violation at '{path}': {exc.message}") from None
    order = doc["rotation_order"]
    protos = []
    seen_ids: set[str] = set()
    seen_triples: set[tuple[str, int, str]] = set()
    for p in doc["prototiles"]:
        t = Prototile(p["id"], p["base"], p["rotation"], p["decoration"])
        if t.rotation >= order:
            raise SchemaViolation(f"tile {t.id}: rotation {t.rotation} outside Z/{order}")
        if t.id in seen_ids:
            raise SchemaViolation(f"duplicate prototile id {t.id}")
        triple = (t.base, t.rotation, t.decoration)
        if triple in seen_triples:
            raise SchemaViolation(f"tile {t.id}: (base, rotation, decoration) is not unique")
        seen_ids.add(t.id)
        seen_triples.add(triple)
        protos.append(t)
    rule_doc = doc["rule"]
    if set(rule_doc) != seen_ids:
        missing = sorted(seen_ids - set(rule_doc))
        extra = sorted(set(rule_doc) - seen_ids)
        raise SchemaViolation(f"rule keys do not match prototiles (missing {missing}, unknown {extra})")
    blocks = []
    for t in protos:
        blk = rule_doc[t.id]
        for col in blk:
            for x in col:
                if x not in seen_ids:
                    raise SchemaViolation(f"rule of {t.id} uses unknown tile {x}")
        blocks.append(((blk[0][0], blk[0][1]), (blk[1][0], blk[1][1])))
    for t in protos:
        if (t.base, (t.rotation + 1) % order, t.decoration) not in seen_triples:
            raise SchemaViolation(f"tile {t.id}: its rotation r·{t.id} is not a prototile")
    labels = doc.get("labels", {})
    edge_labels = tuple((k, v[0], v[1]) for k, v in labels.get("edges", {}).items())
    for name, a, b in edge_labels:
        if a not in seen_ids or b not in seen_ids:
            raise SchemaViolation(f"edge label {name} refers to unknown tiles")
    vertex_labels = tuple(
        (k, tuple((q[0], q[1] % order) for q in v)) for k, v in labels.get("vertices", {}).items()
    )
    sys = SubstitutionSystem(doc["name"], order, tuple(protos), tuple(blocks), edge_labels, vertex_labels)
    _check_equivariance(sys)
    return sys


def _read_document(description: Any) -> Any:
    if isinstance(description, SubstitutionSystem):
        return description.to_json()
    if isinstance(description, (dict, list)):
        return description
    if isinstance(description, Path) or (isinstance(description, str) and not description.lstrip().startswith("{")):
        path = Path(description)
        try:
            text = path.read_text()
        except OSError as exc:
            raise SchemaViolation(f"cannot read {path}: {exc.strerror}") from None
    else:
        text = description
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}") from None


def bundled_system(name: str = "chair") -> SubstitutionSystem:
    """One of the systems shipped with the package: chair, arrow_chair, trivial."""
    ref = resources.files("tilingk") / "data" / f"{name}.json"
    return load_system(json.loads(ref.read_text()))


def rotate_block(sys: SubstitutionSystem, blk: Block) -> Block:
    out = [[None, None], [None, None]]
    for c in range(2):
        for r in range(2):
            out[1 - r][c] = sys.rotate(blk[c][r])
    return ((out[0][0], out[0][1]), (out[1][0], out[1][1]))  # type: ignore[return-value]


def _check_equivariance(sys: SubstitutionSystem) -> None:
    for t in sys.prototiles:
        want = rotate_block(sys, sys.block(t.id))
        got = sys.block(sys.rotate(t.id))
        if want != got:
            raise EquivarianceViolation(
                f"rule is not rotation-equivariant at {t.id}: rule(r·{t.id}) = {got}, r·rule({t.id}) = {want}"
            )


# ---------------------------------------------------------------------------
# substitution on patches


def substitute_patch(sys: SubstitutionSystem, p: Patch, n: int = 1) -> Patch:
    if n < 0:
        raise ValueError("substitution order must be nonnegative")
    cur = p.as_dict()
    for _ in range(n):
        nxt = {}
        for (x, y), t in cur.items():
            blk = sys.block(t)
            for c in range(2):
                for r in range(2):
                    nxt[(2 * x + c, 2 * y + r)] = blk[c][r]
        cur = nxt
    return Patch.from_mapping(cur)


def supertile(sys: SubstitutionSystem, tile_id: str, n: int) -> Patch:
    return substitute_patch(sys, Patch.single(tile_id), n)


def abelianization_matrix(sys: SubstitutionSystem) -> IntegerMatrix:
    """Entry (i, j) counts tile i in the 2×2 block of tile j."""
    n = sys.size
    m = [[0] * n for _ in range(n)]
    for j, blk in enumerate(sys.rule):
        for col in blk:
            for t in col:
                m[sys.index(t)][j] += 1
    return IntegerMatrix.from_rows(m, n)


def is_primitive(sys: SubstitutionSystem) -> bool:
    """Some power of the substitution matrix is strictly positive (Wielandt bound)."""
    n = sys.size
    masks = [0] * n  # masks[j]: bit i set iff tile i occurs in rule(j)
    for j, blk in enumerate(sys.rule):
        for col in blk:
            for t in col:
                masks[j] |= 1 << sys.index(t)
    full = (1 << n) - 1
    bound = (n - 1) ** 2 + 1
    power, steps = masks, 1
    while steps < bound:
        power = [_compose(power, power[j]) for j in range(n)]
        steps *= 2
    return all(m == full for m in power)


def _compose(masks: list[int], col: int) -> int:
    out = 0
    i = 0
    while col:
        if col & 1:
            out |= masks[i]
        col >>= 1
        i += 1
    return out


# ---------------------------------------------------------------------------
# legal windows (internal: tiles as integer indices, windows as tuples w[col][row])

Window = tuple[tuple[int, ...], ...]


def _rule_idx(sys: SubstitutionSystem) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    ix = _index_map(sys)
    return [((ix[b[0][0]], ix[b[0][1]]), (ix[b[1][0]], ix[b[1][1]])) for b in sys.rule]


def _subst_window(rule: Sequence, w: Window) -> list[list[int]]:
    wd, ht = len(w), len(w[0])
    out = [[0] * (2 * ht) for _ in range(2 * wd)]
    for i in range(wd):
        for j in range(ht):
            blk = rule[w[i][j]]
            for c in range(2):
                col = out[2 * i + c]
                col[2 * j] = blk[c][0]
                col[2 * j + 1] = blk[c][1]
    return out


def _subwindows(grid: list[list[int]], size: int) -> Iterable[Window]:
    wd, ht = len(grid), len(grid[0])
    for x in range(wd - size + 1):
        for y in range(ht - size + 1):
            yield tuple(tuple(grid[x + i][y : y + size]) for i in range(size))


@dataclass(frozen=True)
class LegalWindows:
    """2×2 and 3×3 windows occurring in supertiles, with the order at which they stabilized."""

    w2: frozenset[Window]
    w3: frozenset[Window]
    stabilized_at: int
    history: tuple[frozenset[Window], ...]  # 2×2 windows of order-n supertiles, n = 1, 2, ...


@lru_cache(maxsize=None)
def legal_windows(sys: SubstitutionSystem, order: int = DEFAULT_ORDER) -> LegalWindows:
    """Windows of ω^n(t) over all t, iterated until the 2×2 set repeats.

    Since the 2×2 windows of order n+1 are exactly the 2×2 windows of the
    substituted 2×2 windows of order n, equality at consecutive orders is a
    fixed point. Raises NotStabilized if that takes more than ``order`` steps.
    """
    rule = _rule_idx(sys)
    cur = frozenset(tuple(tuple(c) for c in _subst_window(rule, ((i,),))) for i in range(sys.size))
    history = [cur]
    n = 1
    while True:
        nxt: set[Window] = set()
        for w in cur:
            nxt.update(_subwindows(_subst_window(rule, w), 2))
        nxt_f = frozenset(nxt)
        history.append(nxt_f)
        if nxt_f == cur:
            break
        n += 1
        if n > order:
            raise NotStabilized(f"legal 2x2 windows did not stabilize within supertile order {order}")
        cur = nxt_f
    w3: set[Window] = set()
    for w in cur:
        w3.update(_subwindows(_subst_window(rule, w), 3))
    return LegalWindows(cur, frozenset(w3), n, tuple(history))


def patch_complexity(sys: SubstitutionSystem, k: int, order: int = DEFAULT_ORDER) -> int:
    """Number of distinct legal k×k patches.

    Every k×k patch sits inside the image of a legal 2×2 window under ω^n
    once 2^n ≥ k, so enumerating those images is exhaustive.
    """
    if k < 1:
        raise ValueError("patch size must be positive")
    rule = _rule_idx(sys)
    n = max(0, (k - 1).bit_length())
    found: set[Window] = set()
    for w in legal_windows(sys, order).w2:
        grid = [list(c) for c in w]
        for _ in range(n):
            grid = _subst_window(rule, grid)
        found.update(_subwindows(grid, k))
    return len(found)


# ---------------------------------------------------------------------------
# border forcing


@dataclass(frozen=True)
class ForcingReport:
    forces: bool
    witness: tuple[str, tuple, tuple] | None = None  # (tile, collar, other collar)

    def __bool__(self) -> bool:
        return self.forces


def _undecorated_ids(sys: SubstitutionSystem) -> list[tuple[str, int]]:
    return [t.undecorated for t in sys.prototiles]


@lru_cache(maxsize=None)
def _collars(sys: SubstitutionSystem, order: int) -> dict[int, set[tuple]]:
    """Undecorated 4×4 neighbourhoods of ω(t) (ring included) per decorated tile t."""
    lw = legal_windows(sys, order)
    rule = _rule_idx(sys)
    und = _undecorated_ids(sys)
    out: dict[int, set[tuple]] = defaultdict(set)
    for w in lw.w3:
        g = _subst_window(rule, w)
        ring = tuple(tuple(und[g[1 + i][1 + j]] for j in range(4)) for i in range(4))
        out[w[1][1]].add(ring)
    return out


def check_border_forcing(sys: SubstitutionSystem, order: int = DEFAULT_ORDER) -> ForcingReport:
    """Does every tile determine the undecorated tiles around its substitute?"""
    for i, collars in sorted(_collars(sys, order).items()):
        if len(collars) > 1:
            a, b = sorted(collars)[:2]
            return ForcingReport(False, (sys.prototiles[i].id, a, b))
    return ForcingReport(True)


def _require_forcing(sys: SubstitutionSystem, order: int) -> dict[int, tuple]:
    rep = check_border_forcing(sys, order)
    if not rep.forces:
        raise ForcingAbsent(f"{sys.name}: border forcing fails at tile {rep.witness[0]}")
    return {i: next(iter(c)) for i, c in _collars(sys, order).items()}


# ---------------------------------------------------------------------------
# vertex stars


@dataclass(frozen=True)
class VertexStar:
    """Four undecorated tiles meeting at a point, listed BL, BR, TL, TR."""

    id: str
    quad: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class _StarData:
    stars: tuple[tuple, ...]  # all legal undecorated stars
    image: dict  # undecorated star -> undecorated star
    periodic: tuple[tuple, ...]  # eventual range, canonical order
    names: tuple[str, ...]


@lru_cache(maxsize=None)
def _star_data(sys: SubstitutionSystem, order: int) -> _StarData:
    lw = legal_windows(sys, order)
    rule = _rule_idx(sys)
    und = _undecorated_ids(sys)
    image: dict[tuple, tuple] = {}
    for w in lw.w2:
        u = _und_star(und, w)
        g = _subst_window(rule, w)
        img = (und[g[1][1]], und[g[2][1]], und[g[1][2]], und[g[2][2]])
        if image.setdefault(u, img) != img:
            raise DerivationError("the star substitution is not determined by undecorated stars")
    periodic: set[tuple] = set()
    for u in image:
        seen = [u]
        while True:
            u = image[u]
            if u in seen:
                periodic.update(seen[seen.index(u) :])
                break
            seen.append(u)
    label_of = {quad: name for name, quad in sys.vertex_labels}
    labelled = [(name, quad) for name, quad in sys.vertex_labels if quad in periodic]
    rest = sorted(periodic - {q for _, q in labelled})
    ordered = [q for _, q in labelled] + rest
    taken = {n for n, _ in labelled}
    names = []
    k = 0
    for q in ordered:
        if q in label_of:
            names.append(label_of[q])
        else:
            while f"v{k}" in taken:
                k += 1
            names.append(f"v{k}")
            taken.add(f"v{k}")
    return _StarData(tuple(sorted(image)), image, tuple(ordered), tuple(names))


def _und_star(und: Sequence, w: Window) -> tuple:
    return (und[w[0][0]], und[w[1][0]], und[w[0][1]], und[w[1][1]])


def derive_vertex_stars(
    sys: SubstitutionSystem, order: int = DEFAULT_ORDER
) -> tuple[list[VertexStar], IntegerMatrix]:
    """Eventual-range vertex stars and the substitution matrix restricted to them."""
    _require_forcing(sys, order)
    sd = _star_data(sys, order)
    idx = {q: i for i, q in enumerate(sd.periodic)}
    n = len(sd.periodic)
    m = [[0] * n for _ in range(n)]
    for j, q in enumerate(sd.periodic):
        m[idx[sd.image[q]]][j] = 1
    stars = [VertexStar(name, q) for name, q in zip(sd.names, sd.periodic)]
    return stars, IntegerMatrix.from_rows(m, n)


# ---------------------------------------------------------------------------
# edges


@dataclass(frozen=True)
class EdgeType:
    """A decorated edge class.

    ``below``/``above`` hold the decorated tiles that can sit on either side
    (for vertical edges: left/right). ``pair`` is the undecorated pair.
    """

    id: str
    orientation: str
    pair: tuple[tuple[str, int], tuple[str, int]]
    below: frozenset[str]
    above: frozenset[str]
    reflection: int
    decoration: str

    @property
    def left(self) -> frozenset[str]:
        return self.below

    @property
    def right(self) -> frozenset[str]:
        return self.above


@dataclass(frozen=True)
class _EdgeData:
    orientation: str
    classes: tuple[frozenset, ...]  # each class: frozenset of (t1, t2) index pairs, canonical order
    names: tuple[str, ...]
    reflection: tuple[int, ...]
    decoration: tuple[str, ...]
    class_of_pair: dict
    matrix: IntegerMatrix
    rho: tuple[int, ...]  # permutation: rho[i] = index of ρ·class i


def _pairs(lw: LegalWindows, orientation: str) -> set[tuple[int, int]]:
    out = set()
    for w in lw.w2:
        if orientation == "horizontal":
            out.add((w[0][0], w[0][1]))
            out.add((w[1][0], w[1][1]))
        else:
            out.add((w[0][0], w[1][0]))
            out.add((w[0][1], w[1][1]))
    return out


def _children(rule: Sequence, p: tuple[int, int], orientation: str) -> tuple[tuple[int, int], tuple[int, int]]:
    a, b = rule[p[0]], rule[p[1]]
    if orientation == "horizontal":  # a below b: left and right halves of the shared side
        return ((a[0][1], b[0][0]), (a[1][1], b[1][0]))
    return ((a[1][0], b[0][0]), (a[1][1], b[0][1]))  # a left of b: bottom and top halves


def _components(pairs: Iterable[tuple[int, int]]) -> dict[tuple[int, int], int]:
    parent: dict[tuple[str, int], tuple[str, int]] = {}

    def find(x):
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    pairs = sorted(pairs)
    for a, b in pairs:
        ra, rb = find(("s", a)), find(("t", b))
        if ra != rb:
            parent[ra] = rb
    roots: dict = {}
    return {p: roots.setdefault(find(("s", p[0])), len(roots)) for p in pairs}


def _rho_pair(sys: SubstitutionSystem, p: tuple[int, int]) -> tuple[int, int]:
    ids = sys.ids
    return (sys.index(sys.rotate(ids[p[1]], 2)), sys.index(sys.rotate(ids[p[0]], 2)))


@lru_cache(maxsize=None)
def _edge_data(sys: SubstitutionSystem, orientation: str, order: int) -> _EdgeData:
    if orientation not in ("horizontal", "vertical"):
        raise ValueError("orientation must be 'horizontal' or 'vertical'")
    collars = _require_forcing(sys, order)
    lw = legal_windows(sys, order)
    rule = _rule_idx(sys)
    und = _undecorated_ids(sys)
    sd = _star_data(sys, order)
    periodic = set(sd.periodic)
    pairs = _pairs(lw, orientation)
    atom = _components(pairs)

    # endpoint stars of each pair: (start, end) = (left, right) or (bottom, top)
    ends: dict[tuple[int, int], tuple[set, set]] = defaultdict(lambda: (set(), set()))
    for w in lw.w2:
        s = _und_star(und, w)
        if orientation == "horizontal":
            ends[(w[0][0], w[0][1])][1].add(s)  # star is the right end of its left edge
            ends[(w[1][0], w[1][1])][0].add(s)
        else:
            ends[(w[0][0], w[1][0])][1].add(s)  # star is the top end of its lower edge
            ends[(w[0][1], w[1][1])][0].add(s)

    def support(p: tuple[int, int]) -> tuple:
        # undecorated tiles touching the substituted edge, from the forced collars
        ca, cb = collars[p[0]], collars[p[1]]
        if orientation == "horizontal":
            return (tuple(ca[x][2] for x in range(4)), tuple(cb[x][1] for x in range(4)))
        return (tuple(ca[2][y] for y in range(4)), tuple(cb[1][y] for y in range(4)))

    natoms = max(atom.values()) + 1 if atom else 0
    keys: list[set] = [set() for _ in range(natoms)]
    atom_ends: list[tuple[set, set]] = [(set(), set()) for _ in range(natoms)]
    for p, a in atom.items():
        keys[a].add((und[p[0]], und[p[1]], support(p)))
        atom_ends[a][0].update(ends[p][0])
        atom_ends[a][1].update(ends[p][1])
    init = []
    for a in range(natoms):
        if len(keys[a]) != 1:
            raise DerivationError(f"{orientation} edge component {a} has several undecorated supports")
        marks = []
        for side in atom_ends[a]:
            hit = side & periodic
            if not hit:
                marks.append(None)
            elif len(side) == 1:
                marks.append(next(iter(hit)))
            else:
                raise DerivationError("an edge class meets a periodic vertex star and other stars at one end")
        init.append((next(iter(keys[a])), tuple(marks)))

    kids: list[tuple[int, int] | None] = [None] * natoms
    for p, a in atom.items():
        ch = tuple(atom[q] for q in _children(rule, p, orientation))
        if kids[a] is None:
            kids[a] = ch  # type: ignore[assignment]
        elif kids[a] != ch:
            raise DerivationError("edge substitution is not well defined on components")

    # coarsest partition refining the support key and stable under substitution
    labels = _relabel(init)
    while True:
        refined = _relabel([(labels[a], tuple(labels[c] for c in kids[a])) for a in range(natoms)])
        if len(set(refined)) == len(set(labels)):
            break
        labels = refined
    nclass = len(set(labels))
    members: list[set] = [set() for _ in range(nclass)]
    for p, a in atom.items():
        members[labels[a]].add(p)
    raw = [frozenset(m) for m in members]
    cls_of = {p: labels[atom[p]] for p in atom}

    # reflection ρ on classes
    rho_raw = [cls_of[_rho_pair(sys, min(m))] for m in raw]
    order_idx, names, refl, deco = _order_edges(sys, orientation, raw, rho_raw, cls_of, order)
    pos = {c: i for i, c in enumerate(order_idx)}
    classes = tuple(raw[c] for c in order_idx)
    class_of_pair = {p: pos[c] for p, c in cls_of.items()}
    rho = tuple(pos[rho_raw[c]] for c in order_idx)
    n = len(classes)
    m = [[0] * n for _ in range(n)]
    for j, cl in enumerate(classes):
        p = min(cl)
        for q in _children(rule, p, orientation):
            m[class_of_pair[q]][j] += 1
    return _EdgeData(orientation, classes, names, refl, deco, class_of_pair, IntegerMatrix.from_rows(m, n), rho)


def _relabel(keys: Sequence) -> list[int]:
    ids: dict = {}
    for k in sorted(set(keys), key=repr):
        ids[k] = len(ids)
    return [ids[k] for k in keys]


def _order_edges(sys, orientation, raw, rho_raw, cls_of, order):
    """Canonical order: labelled representatives, their ρ-images, then the rest."""
    if orientation == "vertical":
        return _order_vertical(sys, raw, cls_of, order)
    reps: list[tuple[str, int]] = []
    ix = _index_map(sys)
    for name, a, b in sys.edge_labels:
        c = next((i for i, m in enumerate(raw) if any(p[0] == ix[a] for p in m)), None)
        if c is None or not any(p[1] == ix[b] for p in raw[c]):
            raise DerivationError(f"edge label {name} does not name a horizontal edge class")
        reps.append((name, c))
    used = {c for _, c in reps} | {rho_raw[c] for _, c in reps}
    leftover = sorted((c for c in range(len(raw)) if c not in used), key=lambda c: sorted(raw[c]))
    k = 0
    for c in leftover:
        if c in used:
            continue
        reps.append((f"h{k}", c))
        k += 1
        used.update({c, rho_raw[c]})
    order_idx, names, refl, deco = [], [], [], []
    for name, c in reps:
        order_idx.append(c)
        names.append(name)
        refl.append(0)
        deco.append(name)
    for name, c in reps:
        if rho_raw[c] not in order_idx:
            order_idx.append(rho_raw[c])
            names.append("ρ" + name)
            refl.append(1)
            deco.append(name)
    return order_idx, tuple(names), tuple(refl), tuple(deco)


def _order_vertical(sys, raw, cls_of, order):
    """Vertical classes in the basis r·(horizontal basis)."""
    hd = _edge_data(sys, "horizontal", order)
    order_idx = []
    for cl in hd.classes:
        t1, t2 = min(cl)
        # r turns "t1 below t2" into "r·t2 left of r·t1"
        vp = (sys.index(sys.rotate(sys.ids[t2])), sys.index(sys.rotate(sys.ids[t1])))
        if vp not in cls_of:
            raise DerivationError("rotated horizontal edge is not a legal vertical edge")
        order_idx.append(cls_of[vp])
    if sorted(order_idx) != list(range(len(raw))):
        raise DerivationError("vertical edge classes are not the rotations of the horizontal ones")
    names = tuple("r" + n for n in hd.names)
    return order_idx, names, hd.reflection, hd.decoration


def _edges(sys: SubstitutionSystem, orientation: str, order: int) -> _EdgeData:
    return _edge_data(sys, orientation, order)


def derive_edge_types(
    sys: SubstitutionSystem, orientation: str = "horizontal", order: int = DEFAULT_ORDER
) -> tuple[list[EdgeType], IntegerMatrix]:
    """Minimal border-forcing decorated edges and the induced edge substitution matrix."""
    ed = _edges(sys, orientation, order)
    ids = sys.ids
    und = _undecorated_ids(sys)
    out = []
    for i, cl in enumerate(ed.classes):
        p = min(cl)
        out.append(
            EdgeType(
                ed.names[i],
                orientation,
                (und[p[0]], und[p[1]]),
                frozenset(ids[a] for a, _ in cl),
                frozenset(ids[b] for _, b in cl),
                ed.reflection[i],
                ed.decoration[i],
            )
        )
    return out, ed.matrix


def edge_reflection(sys: SubstitutionSystem, orientation: str = "horizontal", order: int = DEFAULT_ORDER) -> list[int]:
    """The permutation ρ on edge classes (canonical indices)."""
    return list(_edges(sys, orientation, order).rho)


# ---------------------------------------------------------------------------
# adjacency


@dataclass(frozen=True)
class AdjacencyTable:
    """Side sets of every edge class, plus the horizontal edges beside each vertex star."""

    horizontal: tuple[EdgeType, ...]
    vertical: tuple[EdgeType, ...]
    vertices: tuple[VertexStar, ...]
    vertex_left: tuple[frozenset[str], ...]  # horizontal edge ids ending at the star
    vertex_right: tuple[frozenset[str], ...]  # horizontal edge ids starting at the star
    stabilized_at: int

    def edge(self, edge_id: str) -> EdgeType:
        for e in self.horizontal + self.vertical:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)


def side_sets_at_order(
    sys: SubstitutionSystem, n: int, orientation: str = "horizontal", order: int = DEFAULT_ORDER
) -> dict[str, tuple]:
    """Side sets of each edge class using only windows of order-n supertiles."""
    lw = legal_windows(sys, order)
    ed = _edges(sys, orientation, order)
    hist = lw.history[min(n, len(lw.history)) - 1]
    out: dict[str, tuple[set, set]] = {name: (set(), set()) for name in ed.names}
    for w in hist:
        ps = (
            [(w[0][0], w[0][1]), (w[1][0], w[1][1])]
            if orientation == "horizontal"
            else [(w[0][0], w[1][0]), (w[0][1], w[1][1])]
        )
        for p in ps:
            c = ed.class_of_pair.get(p)
            if c is None:
                continue
            out[ed.names[c]][0].add(sys.ids[p[0]])
            out[ed.names[c]][1].add(sys.ids[p[1]])
    return {k: (frozenset(a), frozenset(b)) for k, (a, b) in out.items()}


def derive_adjacency(sys: SubstitutionSystem, order: int = DEFAULT_ORDER) -> AdjacencyTable:
    lw = legal_windows(sys, order)
    h, _ = derive_edge_types(sys, "horizontal", order)
    v, _ = derive_edge_types(sys, "vertical", order)
    stars, _ = derive_vertex_stars(sys, order)
    n = lw.stabilized_at
    # the fixed point reached at order n: order n+1 gives the same side sets
    if side_sets_at_order(sys, n, "horizontal", order) != side_sets_at_order(sys, n + 1, "horizontal", order):
        raise NotStabilized("adjacency side sets changed between consecutive supertile orders")
    ed = _edges(sys, "horizontal", order)
    und = _undecorated_ids(sys)
    left: dict[tuple, set] = defaultdict(set)
    right: dict[tuple, set] = defaultdict(set)
    for w in lw.w2:
        s = _und_star(und, w)
        left[s].add(ed.names[ed.class_of_pair[(w[0][0], w[0][1])]])
        right[s].add(ed.names[ed.class_of_pair[(w[1][0], w[1][1])]])
    return AdjacencyTable(
        tuple(h),
        tuple(v),
        tuple(stars),
        tuple(frozenset(left[s.quad]) for s in stars),
        tuple(frozenset(right[s.quad]) for s in stars),
        n,
    )


# ---------------------------------------------------------------------------
# collaring


def _rotate_window(sys: SubstitutionSystem, w: Window) -> Window:
    ids = sys.ids
    size = len(w)
    out = [[0] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            out[size - 1 - j][i] = sys.index(sys.rotate(ids[w[i][j]]))
    return tuple(tuple(c) for c in out)


def collared_system(sys: SubstitutionSystem, order: int = DEFAULT_ORDER) -> SubstitutionSystem:
    """Relabel every tile by its legal 3×3 neighbourhood (full collaring)."""
    if not is_primitive(sys):
        raise NotPrimitive(f"{sys.name} is not primitive")
    lw = legal_windows(sys, order)
    rule = _rule_idx(sys)
    orbits: dict[Window, tuple[int, int]] = {}  # window -> (orbit number, position in orbit)
    count = 0
    for w in sorted(lw.w3):
        if w in orbits:
            continue
        orbit = [w]
        while True:
            nxt = _rotate_window(sys, orbit[-1])
            if nxt == w:
                break
            orbit.append(nxt)
        if len(orbit) != sys.rotation_order:
            raise DerivationError("collared tiles with non-uniform rotation orbits are not supported")
        start = next(k for k, x in enumerate(orbit) if sys.prototiles[x[1][1]].rotation == 0)
        orbit = orbit[start:] + orbit[:start]
        for k, x in enumerate(orbit):
            orbits[x] = (count, k)
        count += 1

    def proto(w: Window) -> Prototile:
        centre = sys.prototiles[w[1][1]]
        num, _ = orbits[w]
        return Prototile(f"{centre.id}/{num}", centre.base, centre.rotation, f"{centre.decoration}/{num}")

    windows = sorted(lw.w3, key=lambda w: (orbits[w][1], orbits[w][0]))
    protos = tuple(proto(w) for w in windows)
    blocks = []
    for w in windows:
        g = _subst_window(rule, w)
        blk = [[None, None], [None, None]]
        for c in range(2):
            for r in range(2):
                child = tuple(tuple(g[1 + c + i][1 + r : 4 + r]) for i in range(3))
                blk[c][r] = proto(child).id
        blocks.append(((blk[0][0], blk[0][1]), (blk[1][0], blk[1][1])))
    out = SubstitutionSystem(f"{sys.name} (collared)", sys.rotation_order, protos, tuple(blocks))
    _check_equivariance(out)
    return out


# ---------------------------------------------------------------------------
# export


def patch_to_json(sys: SubstitutionSystem, p: Patch) -> dict:
    return {
        "system": sys.name,
        "tiles": [
            {"col": x, "row": y, "id": t, "base": sys.tile(t).base, "rotation": sys.tile(t).rotation}
            for (x, y), t in p.tiles
        ],
    }


_PALETTE = ("#e8c547", "#5c80bc", "#4d9078", "#cd4631", "#9e7682", "#f2a65a", "#30323d", "#b8d8ba")


def patch_to_svg(sys: SubstitutionSystem, p: Patch, unit: int = 24) -> str:
    """Diagnostic rendering: one coloured square per tile, labelled, with an orientation tick."""
    x0, y0, x1, y1 = p.bounds()
    width, height = (x1 - x0 + 1) * unit, (y1 - y0 + 1) * unit
    decos = sorted({t.decoration for t in sys.prototiles})
    colour = {d: _PALETTE[i % len(_PALETTE)] for i, d in enumerate(decos)}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="{unit // 4}">'
    ]
    # corner of the tick for rotations 0..3: NE, NW, SW, SE
    ticks = ((0.8, 0.2), (0.2, 0.2), (0.2, 0.8), (0.8, 0.8))
    for (x, y), t in p.tiles:
        tile = sys.tile(t)
        px, py = (x - x0) * unit, (y1 - y) * unit
        parts.append(
            f'<rect x="{px}" y="{py}" width="{unit}" height="{unit}" fill="{colour[tile.decoration]}" '
            f'stroke="#222" stroke-width="0.5"><title>{t}</title></rect>'
        )
        tx, ty = ticks[tile.rotation % 4]
        parts.append(f'<circle cx="{px + tx * unit:.1f}" cy="{py + ty * unit:.1f}" r="{unit / 10:.1f}" fill="#111"/>')
        if unit >= 16:
            parts.append(f'<text x="{px + 2}" y="{py + unit - 3}">{t}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
