import random

import pytest

from conftest import random_form
from core.cech import (
    CechCochain, DeligneCocycle, TotalCochain, bockstein_class, epsilon_star, total_differential, trivial_deligne,
    verify_deligne,
)
from core.chern_weil import coordinate_lift
from core.covers import build_circle_cover, torus_cover
from core.errors import NotAGerbeError
from core.exterior import ExteriorForm, coord_symbol, integrate_simplex, simplex_space
from core.simplicial import (
    beta_of, codegeneracy_map, extract_gerbe, face_map, from_global, i_delta, is_discrete, verify_gerbe, verify_normal,
    verify_simplicial, whitney_form, whitney_lift,
)


@pytest.fixture(scope="module")
def circle():
    return build_circle_cover(3)


@pytest.fixture(scope="module")
def torus():
    return torus_cover(["x1", "x2"], 3)


def random_total(rng, cover, degree) -> TotalCochain:
    components = []
    for nu in range(degree + 1):
        values = {s: random_form(rng, cover.space, degree - nu, 1) for s in cover.nerve.nondegenerate(nu)}
        components.append(CechCochain(cover, nu, degree - nu, values))
    return TotalCochain(cover, degree, components)


def same_cochains(a: TotalCochain, b: TotalCochain, levels) -> bool:
    for nu in levels:
        for simplex in a.cover.nerve.nondegenerate(nu):
            if not a.component(nu).value(simplex).equals(b.component(nu).value(simplex)):
                return False
    return True


def test_face_maps_hit_the_right_vertices():
    assert face_map(1, 0) == {"t1": 1}
    assert face_map(1, 1) == {"t1": 0}
    t1, t2 = coord_symbol("t1"), coord_symbol("t2")
    assert codegeneracy_map(1, 0) == {"t1": t2}
    assert codegeneracy_map(1, 1) == {"t1": t1 + t2}


@pytest.mark.parametrize("p", [1, 2, 3])
def test_top_whitney_form_integrates_to_one(p):
    space = simplex_space(p)
    top = whitney_form(p, tuple(range(p + 1)), space)
    assert integrate_simplex(top, p).evaluate({})[()] == 1


@pytest.mark.parametrize("seed", range(100))
def test_integration_inverts_whitney_lift(seed, circle):
    c = random_total(random.Random(seed), circle, 1)
    assert same_cochains(i_delta(whitney_lift(c)), c, range(2))


@pytest.mark.parametrize("seed", range(5))
def test_integration_inverts_whitney_lift_on_torus(seed, torus):
    c = random_total(random.Random(seed), torus, 2)
    assert same_cochains(i_delta(whitney_lift(c)), c, range(3))


@pytest.mark.parametrize("seed", range(100))
def test_whitney_lift_is_a_chain_map(seed, circle):
    c = random_total(random.Random(seed), circle, 1)
    lhs = whitney_lift(c).d()
    rhs = whitney_lift(total_differential(c))
    for p in range(2):
        for simplex in circle.nerve.level(p):
            assert lhs.value(p, simplex).equals(rhs.value(p, simplex))


@pytest.mark.parametrize("seed", range(100))
def test_whitney_lift_is_simplicial_and_normal(seed, circle):
    lam = whitney_lift(random_total(random.Random(seed), circle, 1), max_level=2)
    assert verify_simplicial(lam, max_level=2)["pass"]
    assert verify_normal(lam, max_level=2)["pass"]
    assert lam.normal is True


def test_global_forms_lift_to_constant_simplicial_forms(circle):
    x = coord_symbol("x")
    a = ExteriorForm.from_terms(circle.space, [(x ** 2, ["x"])])
    lifted = from_global(a, circle, max_level=2)
    assert verify_simplicial(lifted)["pass"]
    assert verify_normal(lifted)["pass"]
    total = i_delta(lifted)
    assert all(v.equals(a) for v in total.component(0).values.values())
    assert not total.component(1).values
    assert is_discrete(lifted)[0] is False


def test_trivial_gerbe_round_trips_through_whitney(circle):
    w = random_form(random.Random(3), circle.space, 1)
    dc = trivial_deligne(circle, 1, w)
    lam = whitney_lift(TotalCochain(circle, 1, list(dc.omega)))
    report = verify_gerbe(lam)
    assert report["pass"]
    assert report["alpha"].equals(w.d())
    extracted = extract_gerbe(lam)
    assert verify_deligne(extracted)["pass"]
    expected = epsilon_star(w, circle)
    assert all(extracted.omega[0].value(s).equals(expected.value(s)) for s in circle.nerve.nondegenerate(0))


def test_non_gerbe_data_is_rejected(circle):
    x = coord_symbol("x")
    edge = circle.nerve.nondegenerate(1)[0]
    c = TotalCochain(circle, 1, [CechCochain(circle, 0, 1, {}),
                                 CechCochain(circle, 1, 0, {edge: ExteriorForm.function(circle.space, x)})])
    with pytest.raises(NotAGerbeError):
        extract_gerbe(whitney_lift(c))


def test_beta_of_a_circle_valued_function_is_its_winding(circle):
    factor = circle.factors[0]
    lifts = {(i,): ExteriorForm.function(circle.space, coordinate_lift(factor, i)) for i in range(circle.size)}
    omega0 = CechCochain(circle, 0, 0, lifts)
    dc = DeligneCocycle(circle, 0, [omega0], omega0.scale(-1), "winding")
    assert verify_deligne(dc)["pass"]
    z = beta_of(whitney_lift(TotalCochain(circle, 0, [omega0])), dc)
    assert z.values == bockstein_class(dc).values
    assert abs(z.pair(circle.fundamental_cycle())) == 1
