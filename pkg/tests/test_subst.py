import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilingk.intlin import IntegerMatrix, integer_eigen_data
from tilingk.subst import (
    EquivarianceViolation,
    NotPrimitive,
    NotStabilized,
    Patch,
    SchemaViolation,
    abelianization_matrix,
    check_border_forcing,
    collared_system,
    derive_adjacency,
    derive_edge_types,
    derive_vertex_stars,
    edge_reflection,
    is_primitive,
    legal_windows,
    load_system,
    patch_complexity,
    patch_to_json,
    patch_to_svg,
    substitute_patch,
    side_sets_at_order,
    supertile,
)


def _rotation_perm(sys):
    n = sys.size
    return IntegerMatrix.from_columns(
        [[int(i == sys.index(sys.rotate(t))) for i in range(n)] for t in sys.ids], n
    )


def _minimal(name="toy", rule=None):
    ids = ["T0", "T1", "T2", "T3"]
    return {
        "name": name,
        "rotation_order": 4,
        "prototiles": [{"id": t, "base": "t", "rotation": k, "decoration": ""} for k, t in enumerate(ids)],
        "rule": rule or {t: [[t, t], [t, t]] for t in ids},
    }


# -- loading ---------------------------------------------------------------


def test_load_from_dict_text_and_path(chair, data_dir):
    doc = json.loads((data_dir / "chair.json").read_text(encoding="utf-8"))
    assert load_system(doc) == chair
    assert load_system(json.dumps(doc)) == chair
    assert load_system(str(data_dir / "chair.json")) == chair
    assert load_system(chair.to_json()) == chair


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.pop("rule"), "schema"),
        (lambda d: d["prototiles"].append(dict(d["prototiles"][0])), "duplicate"),
        (lambda d: d["rule"].pop("T1"), "rule keys"),
        (lambda d: d["rule"].__setitem__("T0", [["T0", "X"], ["T0", "T0"]]), "unknown tile"),
        (lambda d: d["prototiles"].__setitem__(3, {"id": "T3", "base": "t", "rotation": 7, "decoration": ""}), "rotation"),
    ],
)
def test_schema_errors(mutate, message):
    doc = _minimal()
    mutate(doc)
    with pytest.raises(SchemaViolation, match=message):
        load_system(doc)


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(SchemaViolation):
        load_system(str(tmp_path / "nope.json"))
    with pytest.raises(SchemaViolation):
        load_system("{not json")


def test_rule_must_commute_with_rotation():
    rule = {t: [[t, t], [t, t]] for t in ["T0", "T1", "T2", "T3"]}
    rule["T0"] = [["T1", "T0"], ["T0", "T0"]]
    with pytest.raises(EquivarianceViolation):
        load_system(_minimal(rule=rule))


# -- matrices ----------------------------------------------------------------


def test_rotation_equivariance(chair, collared_arrow):
    for sys in (chair, collared_arrow):
        b = abelianization_matrix(sys)
        p = _rotation_perm(sys)
        assert b @ p == p @ b


def test_chair_block_structure(chair):
    # every column sums to 4: each tile is replaced by a 2x2 block
    b = abelianization_matrix(chair)
    assert all(sum(c) == 4 for c in b.columns())


def test_primitivity(chair, trivial, arrow):
    assert is_primitive(chair) and is_primitive(arrow) and is_primitive(trivial)
    toy = load_system(_minimal())
    assert not is_primitive(toy)


def test_border_forcing(chair, arrow, collared_arrow):
    assert check_border_forcing(chair)
    rep = check_border_forcing(arrow)
    assert not rep and rep.witness is not None
    assert check_border_forcing(collared_arrow)
    assert collared_arrow.size == 52


def test_edges_and_stars(chair):
    h, mh = derive_edge_types(chair, "horizontal")
    v, mv = derive_edge_types(chair, "vertical")
    assert len(h) == len(v) == 10
    assert mh == mv
    rho = edge_reflection(chair, "horizontal")
    assert sorted(rho) == list(range(10)) and all(rho[rho[i]] == i for i in range(10))
    stars, ms = derive_vertex_stars(chair)
    assert len(stars) == 5 and ms == IntegerMatrix.identity(5)


def test_patch_complexity(chair, trivial):
    assert [patch_complexity(trivial, k) for k in (1, 2, 3)] == [1, 1, 1]
    counts = [patch_complexity(chair, k) for k in range(1, 5)]
    assert counts[0] == 24 and all(a < b for a, b in zip(counts, counts[1:]))
    with pytest.raises(ValueError):
        patch_complexity(chair, 0)


def test_order_bound_is_enforced(chair):
    with pytest.raises(NotStabilized):
        legal_windows(chair, 1)


def test_export(chair):
    p = supertile(chair, "A", 2)
    doc = patch_to_json(chair, p)
    assert len(doc["tiles"]) == 16
    svg = patch_to_svg(chair, p)
    assert svg.startswith("<svg") and svg.count("<rect") >= 16


# -- properties ----------------------------------------------------------------

@st.composite
def patches(draw, sys, max_tiles=6):
    cells = draw(st.sets(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=max_tiles))
    return Patch.from_mapping({c: draw(st.sampled_from(sys.ids)) for c in cells})


@pytest.mark.property
@settings(max_examples=40)
@given(st.data())
def test_tile_count_homomorphism(chair, data):
    p = data.draw(patches(chair))
    n = data.draw(st.integers(0, 3))
    b = abelianization_matrix(chair)
    assert substitute_patch(chair, p, n).counts(chair) == list((b**n).apply(p.counts(chair)))


@pytest.mark.property
@settings(max_examples=25)
@given(st.data())
def test_composition_law(chair, data):
    p = data.draw(patches(chair, max_tiles=2))
    m = data.draw(st.integers(0, 3))
    n = data.draw(st.integers(0, 6 - m))
    assert substitute_patch(chair, substitute_patch(chair, p, m), n) == substitute_patch(chair, p, m + n)


@pytest.mark.property
def test_adjacency_stabilizes(chair, collared_arrow):
    for sys in (chair, collared_arrow):
        adj = derive_adjacency(sys)
        n = adj.stabilized_at
        for k in range(n, n + 3):
            assert side_sets_at_order(sys, k) == side_sets_at_order(sys, k + 1)
            assert side_sets_at_order(sys, k, "vertical") == side_sets_at_order(sys, k + 1, "vertical")


def test_collaring_preserves_the_tile_matrix_spectrum(arrow, collared_arrow):
    spectrum = integer_eigen_data(abelianization_matrix(collared_arrow).T).multiplicities()
    assert spectrum[4] == (1, 1)
    with pytest.raises(NotPrimitive):
        collared_system(load_system(_minimal()))
