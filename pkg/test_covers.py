import pytest
import sympy as sp

from core.covers import (
    box_cover, build_circle_cover, cover_from_config, face, nerve_degeneracies, nerve_faces, product_cover,
    reduce_simplex, shuffle_paths, simplicial_identity_violations, torus_cover,
)
from core.errors import BadCoverError, NerveIndexError


def boundary(chain: list) -> dict:
    result = {}
    for sign, simplex in chain:
        for i in range(len(simplex)):
            key = face(simplex, i)
            result[key] = result.get(key, 0) + sign * (-1) ** i
    return {k: v for k, v in result.items() if v}


@pytest.mark.parametrize("pou", ["c1cubic", "pl"])
@pytest.mark.parametrize("n", [3, 4, 5])
def test_circle_partition_of_unity_sums_to_one(n, pou):
    cover = build_circle_cover(n, "1/24", "x", pou)
    assert cover.pou_sum_is_one()
    for _, pieces in cover.pou_cells():
        assert sp.expand(sum(pieces.values()) - 1) == 0


def test_circle_nerve_has_only_consecutive_overlaps():
    cover = build_circle_cover(3)
    assert cover.nerve.nondegenerate(1) == [(0, 1), (0, 2), (1, 2)]
    assert cover.nerve.nondegenerate(2) == []
    assert cover.nerve.dimension == 1


@pytest.mark.parametrize("n, overlap", [(2, "1/24"), (3, "0"), (3, "1/6"), (4, "1/5")])
def test_bad_circle_covers_are_rejected(n, overlap):
    with pytest.raises(BadCoverError):
        build_circle_cover(n, overlap)


def test_circle_fundamental_cycle():
    cycle = dict((simplex, sign) for sign, simplex in build_circle_cover(4).fundamental_cycle())
    assert cycle == {(0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): -1}


@pytest.mark.parametrize("n", [3, 4])
def test_torus_fundamental_cycle_is_closed(n):
    cover = torus_cover(["x1", "x2"], n)
    cycle = cover.fundamental_cycle()
    assert cycle
    assert all(len(simplex) == 3 for _, simplex in cycle)
    assert boundary(cycle) == {}


def test_torus_nerve_satisfies_simplicial_identities():
    cover = torus_cover(["x1", "x2"], 3)
    assert cover.nerve.dimension == 3
    assert simplicial_identity_violations(cover.nerve, 2) == []


def test_nerve_face_and_degeneracy_maps():
    nerve = build_circle_cover(3).nerve
    faces = nerve_faces(nerve, 1, 0)
    assert set(faces) == set(nerve.level(1))
    assert all(faces[s] == s[1:] for s in faces)
    degeneracies = nerve_degeneracies(nerve, 1, 1)
    assert all(degeneracies[s] == (s[0], s[1], s[1]) for s in degeneracies)
    with pytest.raises(NerveIndexError):
        nerve_faces(nerve, 1, 2)


def test_face_index_out_of_range():
    with pytest.raises(NerveIndexError):
        face((0, 1), 2)


def test_reduce_simplex_keeps_first_of_each_run():
    assert reduce_simplex((0, 0, 2, 2, 2, 5)) == ((0, 2, 5), [0, 2, 5])


@pytest.mark.parametrize("p, q", [(0, 2), (1, 1), (2, 2), (1, 3)])
def test_shuffle_paths_count_and_signs(p, q):
    paths = shuffle_paths(p, q)
    assert len(paths) == sp.binomial(p + q, p)
    for _, vertices in paths:
        assert vertices[0] == (0, 0) and vertices[-1] == (p, q)
    if p and q:
        assert {sign for sign, _ in paths} == {1, -1}


def test_product_cover_orders_base_before_fibre():
    base = build_circle_cover(3, coord="xi")
    fibre = build_circle_cover(4, coord="x")
    cover = product_cover(base, fibre)
    assert cover.space.coords == ("x", "xi")
    assert cover.size == 12
    assert cover.position((1, 2)) == 6
    assert cover.label(6) == (1, 2)


def test_box_cover_partition_of_unity():
    cover = box_cover(["z1", "z2"], [("-1", "1")] * 2, pieces=2)
    assert cover.size == 4
    assert cover.pou_sum_is_one()
    assert box_cover(["z1"]).nerve.dimension == 0


def test_cover_from_config_rejects_unknown_kinds():
    with pytest.raises(BadCoverError):
        cover_from_config({"model": "sphere"})
    with pytest.raises(BadCoverError):
        cover_from_config({"model": "circle", "pou": "bump"})
    assert cover_from_config({"model": "circle", "arcs": 4}).size == 4
