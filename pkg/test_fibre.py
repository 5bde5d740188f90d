import itertools
import random

import pytest
import sympy as sp

from core.covers import box_cover, build_circle_cover
from core.errors import NormalityRequiredError, PreconditionError
from core.exterior import ExteriorForm, barycentric_coordinates, coord_symbol
from core.fibre import (
    CONVENTIONS, Shuffle, classical_fibre_integral, convention_verdict, enumerate_shuffles, fibre_integrate,
    product_fibration, sigma_coords, stokes_residual,
)
from core.simplicial import SimplicialForm, from_global, level_space

x, xi = coord_symbol("x"), coord_symbol("xi")


@pytest.fixture(scope="module")
def fibration():
    return product_fibration(build_circle_cover(3, coord="xi"), build_circle_cover(3, coord="x"))


def periodic_form(rng: random.Random, space, degree: int) -> ExteriorForm:
    """Random form whose coefficients are periodic in the fibre coordinate x."""
    waves = [sp.Integer(1), sp.sin(2 * sp.pi * x), sp.cos(2 * sp.pi * x)]
    monomials = list(itertools.combinations(space.coords, degree))
    terms = []
    for mono in rng.sample(monomials, k=min(len(monomials), 2)):
        coeff = rng.choice([-2, -1, 1, 3]) * xi ** rng.randint(0, 2) * rng.choice(waves)
        terms.append((coeff, list(mono)))
    return ExteriorForm.from_terms(space, terms, degree=degree)


@pytest.mark.parametrize("q, p", [(0, 0), (1, 1), (2, 1), (1, 3)])
def test_shuffle_enumeration(q, p):
    shuffles = enumerate_shuffles(q, p)
    assert len(shuffles) == sp.binomial(p + q, p)
    assert all(s.p == p and s.q == q for s in shuffles)
    if p * q == 0:
        assert [s.sign for s in shuffles] == [1]


def test_shuffle_rejects_bad_paths():
    with pytest.raises(ValueError):
        Shuffle(2, (0, 1, 1), (0, 0, 2))
    with pytest.raises(ValueError):
        Shuffle(1, (1, 1), (0, 1))


@pytest.mark.parametrize("q, p", [(1, 1), (2, 1), (1, 2)])
def test_sigma_coordinates_sum_to_one(q, p):
    t = barycentric_coordinates(p)
    phi = [sp.Rational(1, q + 1)] * (q + 1)
    for shuffle in enumerate_shuffles(q, p):
        sigma = sigma_coords(shuffle, t, phi)
        assert len(sigma) == p + q + 1
        assert sp.expand(sum(sigma) - 1) == 0


def test_sigma_coordinates_need_a_partition_of_unity():
    shuffle = enumerate_shuffles(1, 1)[0]
    with pytest.raises(PreconditionError):
        sigma_coords(shuffle, barycentric_coordinates(1), [sp.Rational(1, 3), sp.Rational(1, 3)])


def test_classical_fibre_integral_of_the_poincare_curvature(fibration):
    F = ExteriorForm.from_terms(fibration.product.space, [(1, ["xi", "x"])])
    pushed = classical_fibre_integral(F, ["x"])
    assert pushed.equals(ExteriorForm.from_terms(pushed.space, [(-1, ["xi"])]))


@pytest.mark.parametrize("convention", CONVENTIONS)
def test_conventions_agree_on_a_single_base_chart(convention):
    fib = product_fibration(box_cover(["xi"]), build_circle_cover(3, coord="x"))
    a = ExteriorForm.from_terms(fib.product.space, [(xi * x ** 2, ["x"])])
    pushed = fibre_integrate(from_global(a, fib.product), fib, convention, max_level=0)
    expected = classical_fibre_integral(a, ["x"])
    assert pushed.value(0, (0,)).equals(expected.embed(pushed.space(0)))


def test_only_the_join_convention_survives_base_overlaps(fibration):
    a = ExteriorForm.from_terms(fibration.product.space, [(1, ["xi", "x"])])
    verdict = convention_verdict(a, fibration)
    assert verdict["chosen"] == "join"
    assert verdict["conventions"]["join"]["pass"]
    assert not verdict["conventions"]["shuffle"]["matches_oracle"]
    assert not verdict["conventions"]["signed-shuffle"]["matches_oracle"]


@pytest.mark.parametrize("seed", range(100))
def test_stokes_on_random_normal_forms(seed, fibration):
    a = periodic_form(random.Random(seed), fibration.product.space, 1 + seed % 2)
    check = stokes_residual(from_global(a, fibration.product), fibration, "join")
    assert check["pass"], check


def test_wrong_stokes_sign_is_detected(fibration):
    a = ExteriorForm.from_terms(fibration.product.space, [(xi * x, ["x"])])
    lifted = from_global(a, fibration.product)
    assert stokes_residual(lifted, fibration, "join")["pass"]
    assert not stokes_residual(lifted, fibration, "join", sign=1)["pass"]


def test_numeric_backend_matches_exact(fibration):
    a = ExteriorForm.from_terms(fibration.product.space, [(xi ** 2 * x ** 2, ["x"])])
    lifted = from_global(a, fibration.product)
    exact = fibre_integrate(lifted, fibration, max_level=1).value(0, (0,))
    numeric = fibre_integrate(lifted, fibration, backend="numeric", order=8, max_level=1).value(0, (0,))
    assert exact.equals(ExteriorForm.function(exact.space, xi ** 2 / 3))
    assert numeric.evaluate({"xi": 0.25})[()] == pytest.approx(0.25 ** 2 / 3, abs=1e-8)


def test_non_normal_input_is_rejected(fibration):
    a = ExteriorForm.from_terms(fibration.product.space, [(1, ["x"])])
    lifted = from_global(a, fibration.product)
    lifted.normal = False
    with pytest.raises(NormalityRequiredError):
        fibre_integrate(lifted, fibration)


def test_unchecked_input_is_verified_before_integration(fibration):
    a = ExteriorForm.from_terms(fibration.product.space, [(xi * x, ["x"])])
    lifted = from_global(a, fibration.product, max_level=1)
    lifted.normal = None
    pushed = fibre_integrate(lifted, fibration, max_level=1)
    assert lifted.normal is True
    assert pushed.value(0, (0,)).equals(ExteriorForm.function(pushed.space(0), xi / 2))


def test_unchecked_non_normal_input_is_rejected(fibration):
    a = ExteriorForm.from_terms(fibration.product.space, [(1, ["x"])])
    space = fibration.product.space
    scaled = SimplicialForm(fibration.product, 1, lambda p, s: a.scale(p + 1).embed(level_space(p, space)),
                            max_level=1, name="scaled")
    with pytest.raises(NormalityRequiredError):
        fibre_integrate(scaled, fibration, max_level=1)
    assert scaled.normal is False
