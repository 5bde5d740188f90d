import itertools
import random

import pytest
import sympy as sp

from core.exterior import ExteriorForm, affine_space, coord_symbol, periodic_space


def random_polynomial(rng: random.Random, coords, max_degree: int = 2) -> sp.Expr:
    """Small integer-coefficient polynomial in the given coordinates."""
    symbols = [coord_symbol(c) for c in coords]
    expr = sp.Integer(rng.randint(-3, 3))
    for _ in range(rng.randint(1, 3)):
        term = sp.Integer(rng.choice([-2, -1, 1, 2, 3]))
        for s in symbols:
            term *= s ** rng.randint(0, max_degree)
        expr += term
    return expr


def random_trig_polynomial(rng: random.Random, coords, max_frequency: int = 2) -> sp.Expr:
    """Small integer combination of products of sin/cos(2 pi k x) over periodic coordinates."""
    expr = sp.Integer(rng.randint(-2, 2))
    for _ in range(rng.randint(1, 3)):
        term = sp.Integer(rng.choice([-2, -1, 1, 3]))
        for c in coords:
            k = rng.randint(0, max_frequency)
            if k:
                term *= rng.choice([sp.sin, sp.cos])(2 * sp.pi * k * coord_symbol(c))
        expr += term
    return expr


def random_form(rng: random.Random, space, degree: int, max_degree: int = 2) -> ExteriorForm:
    monomials = list(itertools.combinations(space.coords, degree))
    chosen = rng.sample(monomials, k=min(len(monomials), rng.randint(1, 3)))
    terms = [(random_polynomial(rng, space.coords, max_degree), list(m)) for m in chosen]
    return ExteriorForm.from_terms(space, terms, degree=degree)


def random_trig_form(rng: random.Random, space, degree: int, max_frequency: int = 2) -> ExteriorForm:
    monomials = list(itertools.combinations(space.coords, degree))
    chosen = rng.sample(monomials, k=min(len(monomials), rng.randint(1, 3)))
    terms = [(random_trig_polynomial(rng, space.coords, max_frequency), list(m)) for m in chosen]
    return ExteriorForm.from_terms(space, terms, degree=degree)


@pytest.fixture
def chart():
    return affine_space("U", ["u", "v", "w"])


@pytest.fixture
def torus_chart():
    return periodic_space("T2", ["x1", "x2"])


@pytest.fixture
def form_factory():
    def make(seed: int, space, degree: int, max_degree: int = 2) -> ExteriorForm:
        return random_form(random.Random(seed), space, degree, max_degree)
    return make


@pytest.fixture
def trig_form_factory():
    def make(seed: int, space, degree: int, max_frequency: int = 2) -> ExteriorForm:
        return random_trig_form(random.Random(seed), space, degree, max_frequency)
    return make
