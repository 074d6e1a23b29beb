import copy
import dataclasses
import json

import pytest

from tilingk.dimgroup import ClassifiedGroup, limit_group
from tilingk.intlin import IntegerMatrix, kernel_basis
from tilingk.ktheory import (
    CHAIR_CERTIFICATES,
    GateFailure,
    KTheoryError,
    SequenceError,
    boundary_map,
    chair_pipeline,
    solve_four_term,
    solve_six_term_chair,
    twist_relation_holds,
)
from tilingk.subst import (
    abelianization_matrix,
    derive_edge_types,
    derive_vertex_stars,
)

G = ClassifiedGroup.parse


def tiles_vec(sys, plus=(), minus=()):
    v = [0] * sys.size
    for t in plus:
        v[sys.index(t)] += 1
    for t in minus:
        v[sys.index(t)] -= 1
    return tuple(v)


@pytest.fixture(scope="module")
def models(chair):
    b = abelianization_matrix(chair)
    _, mh = derive_edge_types(chair, "horizontal")
    _, mv = derive_edge_types(chair, "vertical")
    _, ms = derive_vertex_stars(chair)
    return {
        "tiles": limit_group(b.T),
        "h": limit_group(mh.T),
        "v": limit_group(mv.T),
        "stars": limit_group(ms.T),
    }


@pytest.fixture(scope="module")
def maps(chair):
    return {lv: boundary_map(chair, lv) for lv in (0, 1, 2)}


@pytest.fixture(scope="module")
def pieces(models, maps):
    res = solve_four_term(models["stars"], maps[0], models["h"])
    disc = solve_four_term(models["v"], maps[1], models["tiles"])
    return res, disc


# -- boundary maps ---------------------------------------------------------------


def test_level1_column(maps):
    assert maps[1].column("ra") == (1, 1, 0, 0, 0, 0, 0, 0, -1, 0, -1, 0) + (0,) * 12


def test_level2_column(chair, maps):
    assert maps[2].column("a") == tiles_vec(chair, ["r3A", "r3B"], ["C1", "D1"])


def test_level0_column(maps):
    # positive side is the edge ending at the star: c - ρc, the negative of (ρ - 1)c
    col = dict(zip(maps[0].target_basis, maps[0].column("v0")))
    assert col == {**{k: 0 for k in maps[0].target_basis}, "c": 1, "ρc": -1}


def test_shapes_and_level_check(chair, maps):
    assert maps[0].matrix.shape == (10, 5)
    assert maps[1].matrix.shape == (24, 10)
    assert maps[2].matrix.shape == (24, 10)
    with pytest.raises(ValueError):
        boundary_map(chair, 3)


def test_twist_relation(chair, maps):
    assert twist_relation_holds(chair, maps[1])
    assert twist_relation_holds(chair, dataclasses.replace(maps[1], matrix=maps[1].matrix.scale(3)))
    cols = maps[1].matrix.columns()
    cols[0] = tuple(-x for x in cols[0])
    bad = dataclasses.replace(maps[1], matrix=IntegerMatrix.from_columns(cols, 24))
    assert not twist_relation_holds(chair, bad)
    with pytest.raises(ValueError):
        twist_relation_holds(chair, maps[2])


def test_adjacency_unavailable(chair):
    with pytest.raises(KTheoryError, match="adjacency"):
        boundary_map(chair, 1, order=2)


# -- four-term ----------------------------------------------------------------


def test_four_term_instances(pieces):
    res, disc = pieces
    k1, k0 = res
    assert (k1, k0) == (G("Z"), G("Z[1/2] (+) Z^4"))
    assert (disc.K1, disc.K0) == (G("Z[1/2]"), G("Z[1/4] (+) Z[1/2]^2 (+) Z^4"))
    assert disc.piece.kind == "four-term"
    assert disc.piece.group("source") == G("Z[1/2] (+) Z^8")


def test_four_term_zero_map(models):
    zero = IntegerMatrix.zeros(24, 10)
    k1, k0 = solve_four_term(models["v"], zero, models["tiles"])
    assert k1 == G("Z[1/2] (+) Z^8")
    assert k0 == G("Z[1/4] (+) Z[1/2]^2 (+) Z^12")


def test_four_term_rejects_presentation_only():
    a = limit_group(IntegerMatrix.from_rows([[1, 1], [1, -1]]))
    with pytest.raises(SequenceError, match="presentation-only"):
        solve_four_term(a, IntegerMatrix.identity(2), a)


def test_four_term_rejects_noncommuting_map(models):
    with pytest.raises(SequenceError):
        solve_four_term(models["v"], IntegerMatrix.from_columns([[1] + [0] * 23] * 10, 24), models["tiles"])


# -- six-term -------------------------------------------------------------------


def test_six_term_chair(pieces, maps):
    res, disc = pieces
    out = solve_six_term_chair(res, disc, maps[2])
    k0, k1 = out
    assert k0 == G("Z[1/4] (+) Z[1/2]^2 (+) Z")
    assert k1 == G("Z[1/2]^2")
    assert out.kernel == G("Z[1/2]") and out.cokernel == G("Z[1/4] (+) Z[1/2]^2")
    assert dict(out.piece.certificates) == CHAIR_CERTIFICATES


def test_six_term_zero_gluing(pieces):
    res, disc = pieces
    out = solve_six_term_chair(res, disc, IntegerMatrix.zeros(24, 10))
    assert out.K0 == ClassifiedGroup.build([(4, 1), (2, 2), (1, 4)] + [(1, 1)])
    assert out.K1 == G("Z[1/2]^2 (+) Z^4")


def test_six_term_missing_certificate(pieces, maps):
    res, disc = pieces
    certs = dict(CHAIR_CERTIFICATES)
    del certs["gamma-section"]
    with pytest.raises(SequenceError, match="gamma-section"):
        solve_six_term_chair(res, disc, maps[2], certs)


def test_six_term_nonfree_target(pieces, maps):
    res, disc = pieces
    fake = dataclasses.replace(res, K1=G("Z[1/2]"))
    with pytest.raises(SequenceError, match="not free"):
        solve_six_term_chair(fake, disc, maps[2])


def test_six_term_composability(chair, pieces, maps):
    # f = β2 + u·wᵀ with B^T u = u and M w = w still commutes with the
    # connecting maps, but w does not vanish on the level-0 image, so the
    # level-0 relations are not sent into the level-1 image.
    res, disc = pieces
    b = abelianization_matrix(chair)
    _, m = derive_edge_types(chair, "horizontal")
    u = kernel_basis(b.T - IntegerMatrix.identity(24)).basis.column(0)
    w = next(
        c for c in kernel_basis(m - IntegerMatrix.identity(10)).basis.columns() if any(maps[0].matrix.T.apply(c))
    )
    f = maps[2].matrix + IntegerMatrix.from_columns([u], 24) @ IntegerMatrix.from_rows([w], 10)
    with pytest.raises(SequenceError, match="composable"):
        solve_six_term_chair(res, disc, f)


# -- pipeline ---------------------------------------------------------------------


def test_pipeline_refuses_trivial(trivial):
    with pytest.raises(GateFailure) as exc:
        chair_pipeline(trivial)
    assert exc.value.stage == "gate"


def test_pipeline_requires_forcing(arrow):
    with pytest.raises(GateFailure, match="collar"):
        chair_pipeline(arrow)


def test_pipeline_error_carries_stage(chair):
    with pytest.raises(KTheoryError) as exc:
        chair_pipeline(chair, order=2)
    assert exc.value.stage == "gate" and str(exc.value).startswith("[gate]")


def test_pipeline_report(chair_report):
    rep = chair_report
    assert rep.passed
    assert rep.final_line() == "K0 = Z[1/4] (+) Z[1/2]^2 (+) Z, K1 = Z[1/2]^2"
    assert all(g.provenance for g in rep.groups.values())
    doc = rep.to_json()
    assert json.loads(json.dumps(doc, sort_keys=True)) == doc
    assert rep.to_text().splitlines()[-1] == rep.final_line()
    joined = " ".join(rep.discrepancies)
    assert "negatives" in joined and "column d" in joined


def test_ledger_detects_wrong_reference(chair, expected):
    bad = copy.deepcopy(expected)
    bad["groups"]["K1"] = "Z[1/2]"
    bad["matrices"]["tiles"]["entries"][0][0] = 3
    bad["vertex_count"] = 6
    rep = chair_pipeline(chair, expected=bad)
    failed = {e.name for e in rep.ledger if not e.passed}
    assert failed == {"expected/group/K1", "expected/matrix/tiles"}
    assert any("reference states 6" in d for d in rep.discrepancies)
