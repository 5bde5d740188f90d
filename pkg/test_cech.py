import random

import pytest
import sympy as sp

from conftest import random_form
from core.cech import (
    CechCochain, IntegralCechCocycle, TotalCochain, apply_equivalence, bockstein_class, cech_delta, curvature,
    epsilon_star, glue, periods, sphere_cycle, sphere_period_expected, sphere_volume_form, torus_cycles,
    total_D, total_differential, trivial_deligne, verify_deligne,
)
from core.covers import torus_cover
from core.errors import IntegralityError, NotClosedError, PreconditionError
from core.exterior import ExteriorForm, affine_space, coord_symbol, periodic_space


@pytest.fixture(scope="module")
def torus():
    return torus_cover(["x1", "x2"], 3)


def random_cochain(rng, cover, p, q) -> CechCochain:
    values = {s: random_form(rng, cover.space, q, 1) for s in cover.nerve.nondegenerate(p)}
    return CechCochain(cover, p, q, values)


@pytest.mark.parametrize("seed", range(100))
def test_delta_squared_is_zero(seed, torus):
    rng = random.Random(seed)
    c = random_cochain(rng, torus, seed % 2, rng.randint(0, 1))
    twice = cech_delta(cech_delta(c))
    assert all(v.is_zero() for v in twice.values.values())


@pytest.mark.parametrize("seed", range(100))
def test_total_differential_squared_is_zero(seed, torus):
    rng = random.Random(seed)
    c = TotalCochain(torus, 1, [random_cochain(rng, torus, 0, 1), random_cochain(rng, torus, 1, 0)])
    twice = total_differential(total_differential(c))
    assert all(v.is_zero() for comp in twice.components for v in comp.values.values())


@pytest.mark.parametrize("p", [0, 1])
def test_total_D_splits_into_delta_and_signed_d(p, torus):
    c = random_cochain(random.Random(p), torus, p, 1)
    delta_part, d_part = total_D(c)
    assert delta_part.bidegree == (p + 1, 1) and d_part.bidegree == (p, 2)
    assert all(delta_part.value(s).equals(cech_delta(c).value(s)) for s in delta_part.tuples())
    sign = 1 if p == 0 else -1
    assert all(d_part.value(s).equals(c.value(s).d().scale(sign)) for s in c.tuples())


def test_epsilon_star_is_delta_closed(torus):
    a = ExteriorForm.from_terms(torus.space, [(coord_symbol("x1"), ["x2"])])
    assert all(v.is_zero() for v in cech_delta(epsilon_star(a, torus)).values.values())


def test_glue_inverts_epsilon_star(torus):
    a = ExteriorForm.from_terms(torus.space, [(coord_symbol("x1") ** 2, ["x2"])])
    assert glue(epsilon_star(a, torus)).equals(a)


@pytest.mark.parametrize("seed", range(100))
def test_trivial_cocycle_verifies_with_curvature_dw(seed, torus):
    w = random_form(random.Random(seed), torus.space, 1)
    dc = trivial_deligne(torus, 1, w)
    report = verify_deligne(dc)
    assert report["pass"], report
    assert any(c["ref"] == "curvature-extraction" and c["pass"] for c in report["checks"])
    assert report["curvature"] is not None
    assert curvature(dc).equals(w.d())


@pytest.mark.parametrize("seed", range(100))
def test_gauge_equivalence_keeps_cocycle_and_curvature(seed, torus):
    rng = random.Random(seed)
    w = random_form(rng, torus.space, 1)
    dc = trivial_deligne(torus, 1, w)
    eta = random_cochain(rng, torus, 0, 0)
    moved = apply_equivalence(dc, [eta])
    assert verify_deligne(moved)["pass"]
    assert curvature(moved).equals(curvature(dc))


def test_broken_cocycle_is_reported_not_raised(torus):
    dc = trivial_deligne(torus, 1)
    edge = torus.nerve.nondegenerate(1)[0]
    x1 = coord_symbol("x1")
    dc.omega[1] = CechCochain(torus, 1, 0, {edge: ExteriorForm.function(torus.space, x1)})
    report = verify_deligne(dc)
    assert not report["pass"]
    assert any(c["ref"] == "cocycle-condition" and not c["pass"] for c in report["checks"])


def test_non_integral_bockstein_raises(torus):
    dc = trivial_deligne(torus, 1)
    edge = torus.nerve.nondegenerate(1)[0]
    dc.omega[1] = CechCochain(torus, 1, 0, {edge: ExteriorForm.function(torus.space, sp.Rational(1, 3))})
    with pytest.raises(IntegralityError):
        bockstein_class(dc)


def test_integral_cocycle_pairing(torus):
    z = IntegralCechCocycle(torus, 1, {(0, 1): 2, (1, 2): -1})
    assert z.pair([(1, (0, 1)), (1, (1, 2)), (-1, (0, 2))]) == 1
    assert z.scale(3).values == {(0, 1): 6, (1, 2): -3}


def test_torus_periods():
    space = periodic_space("T2", ["x1", "x2"])
    volume = ExteriorForm.from_terms(space, [(1, ["x2", "x1"])])
    assert periods(volume, torus_cycles(space, 2)) == [-1]
    one_forms = ExteriorForm.from_terms(space, [(3, ["x1"]), (-2, ["x2"])])
    assert periods(one_forms, torus_cycles(space, 1)) == [3, -2]


def test_periods_need_closed_forms():
    space = periodic_space("T2", ["x1", "x2"])
    with pytest.raises(NotClosedError):
        periods(ExteriorForm.from_terms(space, [(coord_symbol("x1"), ["x2"])]), torus_cycles(space, 1))


def test_periods_need_cycles_of_the_form_degree():
    space = periodic_space("T2", ["x1", "x2"])
    volume = ExteriorForm.from_terms(space, [(1, ["x1", "x2"])])
    with pytest.raises(PreconditionError):
        periods(volume, torus_cycles(space, 1))


@pytest.mark.parametrize("k, volume", [(2, 2 * sp.pi), (3, 4 * sp.pi)])
def test_sphere_cycle_volume(k, volume):
    space = affine_space(f"R{k}", [f"z{j}" for j in range(1, k + 1)])
    cycle = sphere_cycle(k, space)
    assert sp.simplify(cycle.volume - volume) == 0
    form = sphere_volume_form(space, space.coords)
    assert sp.simplify(cycle.integrate(form) - volume) == 0


@pytest.mark.parametrize("k, expected", [(2, -1), (3, -2), (4, 6)])
def test_sphere_period_expected(k, expected):
    assert sphere_period_expected(k) == expected
