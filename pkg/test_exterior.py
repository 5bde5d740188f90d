import pytest
import sympy as sp

from core.errors import CoordinateNameError, DifferentiabilityError, SpaceMismatchError
from core.exterior import (
    CoeffExpr, ExteriorForm, affine_space, angular_space, as_exact, coord_symbol, exterior_d, integrate_periodic,
    integrate_simplex, periodic_space, pullback, simplex_space, wedge,
)
from core.families import expected_torus_invariant

x, z = coord_symbol("x"), coord_symbol("z")


@pytest.mark.parametrize("seed", range(100))
def test_d_squared_is_zero(seed, chart, form_factory):
    a = form_factory(seed, chart, seed % 3)
    assert a.d().d().is_zero()


@pytest.mark.parametrize("seed", range(100))
def test_leibniz_rule(seed, chart, form_factory):
    p, q = seed % 2, (seed // 2) % 2
    a = form_factory(seed, chart, p)
    b = form_factory(seed + 1000, chart, q)
    lhs = a.wedge(b).d()
    rhs = a.d().wedge(b) + a.wedge(b.d()).scale((-1) ** p)
    assert lhs.equals(rhs)


@pytest.mark.parametrize("seed", range(100))
def test_graded_commutativity(seed, chart, form_factory):
    a = form_factory(seed, chart, 1)
    b = form_factory(seed + 500, chart, 2)
    assert a.wedge(b).equals(b.wedge(a))
    c = form_factory(seed + 900, chart, 1)
    assert a.wedge(c).equals(c.wedge(a).scale(-1))


@pytest.mark.parametrize("seed", range(100))
def test_pullback_commutes_with_d(seed, chart, form_factory):
    target = affine_space("S", ["s", "r"])
    s, r = coord_symbol("s"), coord_symbol("r")
    mapping = {"u": s * r, "v": s + r ** 2, "w": 2 * s - r}
    a = form_factory(seed, chart, seed % 2)
    assert a.d().pullback(target, mapping).equals(a.pullback(target, mapping).d())


@pytest.mark.parametrize("seed", range(100))
def test_pullback_is_functorial(seed, chart, form_factory):
    middle = affine_space("S", ["s", "r"])
    line = affine_space("L", ["y"])
    s, r, y = coord_symbol("s"), coord_symbol("r"), coord_symbol("y")
    f = {"u": s * r, "v": s + r ** 2, "w": 2 * s - r}
    g = {"s": y ** 2, "r": 1 - y}
    composed = {name: sp.expand(expr.subs({s: y ** 2, r: 1 - y})) for name, expr in f.items()}
    a = form_factory(seed, chart, seed % 2)
    assert pullback(g, pullback(f, a, middle), line).equals(pullback(composed, a, line))
    assert pullback(f, exterior_d(a), middle).equals(exterior_d(pullback(f, a, middle)))


def test_repeated_differential_vanishes(chart):
    assert ExteriorForm.from_terms(chart, [(1, ["u", "u"])], degree=2).is_zero()


def test_monomials_are_sorted_with_sign(chart):
    a = ExteriorForm.from_terms(chart, [(1, ["w", "u"])])
    assert set(a.terms) == {("u", "w")}
    assert a.evaluate({})[("u", "w")] == -1


def test_forms_on_different_spaces_do_not_mix(chart):
    other = affine_space("V", ["p", "q"])
    with pytest.raises(SpaceMismatchError):
        ExteriorForm.differential(chart, "u") + ExteriorForm.differential(other, "p")


def test_unknown_coordinate_is_reported(chart):
    with pytest.raises(CoordinateNameError):
        ExteriorForm.differential(chart, "t")


def test_integrate_fibre_moves_fibre_differentials_left():
    space = periodic_space("T", ["x", "z"])
    a = ExteriorForm.from_terms(space, [(x * z, ["x", "z"])])
    assert a.integrate_fibre(["x"]).equals(ExteriorForm.from_terms(space.without(["x"]), [(z / 2, ["z"])]))
    b = ExteriorForm.from_terms(space, [(1, ["z", "x"])])
    assert b.integrate_fibre(["x"]).equals(ExteriorForm.from_terms(space.without(["x"]), [(-1, ["z"])]))


def test_integrate_periodic_rejects_affine_coordinates(chart):
    with pytest.raises(SpaceMismatchError):
        integrate_periodic(ExteriorForm.differential(chart, "u"), ["u"])


def test_piecewise_coefficient_integrates_cellwise():
    tent = CoeffExpr.piecewise("x", ["1/2"], [x, 1 - x])
    assert tent.integrate("x", 0, 1).pieces[()] == sp.Rational(1, 4)
    assert tent.evaluate({"x": sp.Rational(3, 4)}) == sp.Rational(1, 4)


def test_piecewise_subs_reverses_cells_under_reflection():
    tent = CoeffExpr.piecewise("x", ["1/4"], [x, 2 * x], continuity="none")
    moved = tent.subs({"x": 1 - coord_symbol("y")})
    assert moved.evaluate({"y": sp.Rational(9, 10)}) == sp.Rational(1, 10)
    assert moved.evaluate({"y": sp.Rational(1, 10)}) == sp.Rational(9, 5)


def test_integrate_simplex_gives_simplex_volume():
    space = simplex_space(2)
    volume = ExteriorForm.from_terms(space, [(1, ["t1", "t2"])])
    assert integrate_simplex(volume, 2).evaluate({})[()] == sp.Rational(1, 2)


def test_numeric_integral_matches_exact():
    space = periodic_space("T", ["x", "z"])
    a = ExteriorForm.from_terms(space, [(x ** 3 * z, ["x"])])
    exact = a.integrate_fibre(["x"]).evaluate({"z": sp.Rational(1, 2)})[()]
    numeric = a.to_numeric(4).integrate_fibre(["x"]).evaluate({"z": 0.5})[()]
    assert numeric == pytest.approx(float(exact), rel=1e-12)


def test_numeric_form_keeps_d_while_it_has_a_source():
    space = periodic_space("T", ["x", "z"])
    f = ExteriorForm.function(space, x ** 2).to_numeric()
    assert f.d().evaluate({"x": 0.5})[("x",)] == pytest.approx(1.0)


def test_numeric_quadrature_result_has_no_d():
    space = periodic_space("T", ["x", "z"])
    a = ExteriorForm.from_terms(space, [(x * z, ["x"])]).to_numeric()
    with pytest.raises(DifferentiabilityError):
        a.integrate_fibre(["x"]).d()


def test_as_exact_parses_rationals():
    assert as_exact("1/24") == sp.Rational(1, 24)
    assert as_exact(0.5) == sp.Rational(1, 2)


@pytest.mark.parametrize("seed", range(100))
def test_d_squared_is_zero_on_trig_forms(seed, torus_chart, trig_form_factory):
    a = trig_form_factory(seed, torus_chart, seed % 2)
    assert a.d().d().is_zero()


@pytest.mark.parametrize("seed", range(100))
def test_leibniz_rule_on_trig_forms(seed, torus_chart, trig_form_factory):
    p, q = seed % 2, (seed // 2) % 2
    a = trig_form_factory(seed, torus_chart, p)
    b = trig_form_factory(seed + 1000, torus_chart, q)
    assert a.wedge(b).d().equals(a.d().wedge(b) + a.wedge(b.d()).scale((-1) ** p))


@pytest.mark.parametrize("seed", range(100))
def test_exact_top_forms_integrate_to_zero_over_the_torus(seed, torus_chart, trig_form_factory):
    a = trig_form_factory(seed, torus_chart, 1)
    assert integrate_periodic(a.d(), ["x1", "x2"]).is_zero()


def torus_connection(k: int) -> ExteriorForm:
    xs = [f"x{j}" for j in range(1, k + 1)]
    zs = [f"z{j}" for j in range(1, k + 1)]
    space = periodic_space(f"T{k}", xs).product(affine_space(f"R{k}", zs))
    return ExteriorForm.from_terms(space, [(coord_symbol(zj), [xj]) for xj, zj in zip(xs, zs)])


def test_chern_simons_form_on_the_two_torus_chart():
    B = torus_connection(2)
    z1, z2 = coord_symbol("z1"), coord_symbol("z2")
    cs = wedge(B, exterior_d(B))
    assert cs.equals(ExteriorForm.from_terms(B.space, [(-z1, ["x1", "x2", "z2"]), (z2, ["x1", "x2", "z1"])]))
    top = ExteriorForm.from_terms(B.space, [(-2, ["x1", "x2", "z1", "z2"])])
    assert exterior_d(cs).equals(top)
    assert B.d().power(2).equals(top)
    base = B.space.without(["x1", "x2"])
    assert cs.integrate_fibre(["x1", "x2"]).equals(ExteriorForm.from_terms(base, [(z2, ["z1"]), (-z1, ["z2"])]))


def test_circle_pullback_of_the_rotation_form():
    plane = affine_space("R2", ["z1", "z2"])
    z1, z2 = coord_symbol("z1"), coord_symbol("z2")
    rotation = ExteriorForm.from_terms(plane, [(z2, ["z1"]), (-z1, ["z2"])])
    circle = angular_space("S1", ["theta"])
    theta = coord_symbol("theta")
    pulled = pullback({"z1": sp.cos(theta), "z2": sp.sin(theta)}, rotation, circle)
    assert pulled.equals(ExteriorForm.from_terms(circle, [(-1, ["theta"])]))


@pytest.mark.parametrize("k", [2, 3])
def test_torus_invariant_closed_form_from_wedge_and_fibre_integration(k):
    B = torus_connection(k)
    xs = [f"x{j}" for j in range(1, k + 1)]
    invariant = B.wedge(B.d().power(k - 1)).integrate_fibre(xs)
    assert invariant.equals(expected_torus_invariant(k, B.space.without(xs)))
