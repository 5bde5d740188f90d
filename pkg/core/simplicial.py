"""
Simplicial differential forms on the nerve of a cover.

A SimplicialForm is evaluated lazily: level p and a nerve tuple I give a form on
Delta^p x (model space), with simplex coordinates t1..tp listed first.
"""

import itertools
import logging
import threading
from functools import lru_cache

import sympy as sp

from .cech import (
    CechCochain, DeligneCocycle, IntegralCechCocycle, TotalCochain, _is_integer_value, bockstein_class, glue,
    integral_values, make_check,
)
from .covers import GoodCover, degeneracy, face
from .errors import InternalConsistencyError, NotAGerbeError
from .exterior import (
    CoordinateSpace, ExteriorForm, barycentric_coordinates, factorial, integrate_simplex, simplex_space,
)

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')


# --- Simplex maps ---

def level_space(p: int, space: CoordinateSpace) -> CoordinateSpace:
    return simplex_space(p).product(space, name=f"Delta{p}x{space.name}")


@lru_cache(maxsize=None)
def face_map(p: int, i: int) -> dict:
    """epsilon^i : Delta^(p-1) -> Delta^p as {t_k of Delta^p: expression in t_1..t_(p-1)}."""
    r = barycentric_coordinates(p - 1)
    images = []
    for k in range(p + 1):
        if k < i:
            images.append(r[k])
        elif k == i:
            images.append(sp.Integer(0))
        else:
            images.append(r[k - 1])
    return {f"t{k}": images[k] for k in range(1, p + 1)}


@lru_cache(maxsize=None)
def codegeneracy_map(p: int, i: int) -> dict:
    """eta^i : Delta^(p+1) -> Delta^p as {t_k of Delta^p: expression in t_1..t_(p+1)}."""
    t = barycentric_coordinates(p + 1)
    images = []
    for k in range(p + 1):
        if k < i:
            images.append(t[k])
        elif k == i:
            images.append(t[i] + t[i + 1])
        else:
            images.append(t[k + 1])
    return {f"t{k}": sp.expand(images[k]) for k in range(1, p + 1)}


def barycentric_differential(p: int, k: int, space: CoordinateSpace) -> ExteriorForm:
    """dt_k on Delta^p x M, with dt_0 = -(dt_1 + ... + dt_p)."""
    if k == 0:
        return ExteriorForm.from_terms(space, [(-1, [f"t{j}"]) for j in range(1, p + 1)], degree=1)
    return ExteriorForm.differential(space, f"t{k}")


def whitney_form(p: int, indices: tuple, space: CoordinateSpace) -> ExteriorForm:
    """nu! sum_s (-1)^s t_{k_s} dt_{k_0} ^ .. (omit s) .. ^ dt_{k_nu} on Delta^p x M."""
    nu = len(indices) - 1
    t = barycentric_coordinates(p)
    total = ExteriorForm.zero(space, nu)
    for s, k in enumerate(indices):
        term = ExteriorForm.function(space, t[k])
        for j, other in enumerate(indices):
            if j != s:
                term = term.wedge(barycentric_differential(p, other, space))
        total = total + (term if s % 2 == 0 else -term)
    return total.scale(factorial(nu))


# --- Simplicial forms ---

class SimplicialForm:
    """Lazy simplicial form: evaluator(p, simplex) -> ExteriorForm on level_space(p, cover.space)."""

    def __init__(self, cover: GoodCover, degree: int, evaluator, max_level: int | None = None,
                 name: str = "form", normal: bool | None = None):
        self.cover = cover
        self.degree = degree
        self.evaluator = evaluator
        if max_level is None:
            max_level = max(cover.nerve.dimension + 1, degree + 1)
        self.max_level = max_level
        self.name = name
        self.normal = normal
        self._cache = {}
        self._lock = threading.Lock()

    def space(self, p: int) -> CoordinateSpace:
        return level_space(p, self.cover.space)

    def value(self, p: int, simplex: tuple) -> ExteriorForm:
        key = (p, tuple(simplex))
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        form = self.evaluator(p, tuple(simplex))
        with self._lock:
            self._cache[key] = form
        return form

    def _derived(self, evaluator, degree=None, name=None, normal=None) -> "SimplicialForm":
        return SimplicialForm(self.cover, self.degree if degree is None else degree, evaluator, self.max_level,
                              name or self.name, normal)

    def d(self) -> "SimplicialForm":
        return self._derived(lambda p, s: self.value(p, s).d(), self.degree + 1, f"d({self.name})", self.normal)

    def __add__(self, other: "SimplicialForm") -> "SimplicialForm":
        return self._derived(lambda p, s: self.value(p, s) + other.value(p, s), name=f"{self.name}+{other.name}",
                             normal=True if self.normal and other.normal else None)

    def __sub__(self, other: "SimplicialForm") -> "SimplicialForm":
        return self._derived(lambda p, s: self.value(p, s) - other.value(p, s), name=f"{self.name}-{other.name}",
                             normal=True if self.normal and other.normal else None)

    def scale(self, factor) -> "SimplicialForm":
        return self._derived(lambda p, s: self.value(p, s).scale(factor), name=f"{factor}*{self.name}",
                             normal=self.normal)

    def to_numeric(self, order: int = 8) -> "SimplicialForm":
        return self._derived(lambda p, s: self.value(p, s).to_numeric(order), name=f"{self.name}[numeric]",
                             normal=self.normal)

    def to_json(self, levels=None) -> dict:
        levels = range(self.max_level + 1) if levels is None else levels
        return {
            "name": self.name,
            "degree": self.degree,
            "levels": [
                {"level": p, "tuple": list(s), "form": self.value(p, s).to_json()}
                for p in levels for s in self.cover.nerve.nondegenerate(p)
            ],
        }


def from_global(a: ExteriorForm, cover: GoodCover, max_level: int | None = None) -> SimplicialForm:
    """eps* of a global form: the same t-independent form at every level."""
    base = a if a.space == cover.space else a.embed(cover.space)
    return SimplicialForm(cover, a.degree, lambda p, s: base.embed(level_space(p, cover.space)), max_level,
                          "eps*", normal=True)


def whitney_lift(c: TotalCochain, max_level: int | None = None) -> SimplicialForm:
    """
    E(c)^(p)(I) = sum over index sets K with I[K] strictly increasing of W_K ^ c^(|K|-1)(I[K]).
    """
    cover = c.cover

    def evaluate(p: int, simplex: tuple) -> ExteriorForm:
        space = level_space(p, cover.space)
        total = ExteriorForm.zero(space, c.degree)
        for nu in range(min(p, c.degree) + 1):
            component = c.component(nu)
            for indices in itertools.combinations(range(p + 1), nu + 1):
                sub = tuple(simplex[k] for k in indices)
                if any(a >= b for a, b in zip(sub[:-1], sub[1:])):
                    continue
                value = component.value(sub)
                if not value.terms:
                    continue
                total = total + whitney_form(p, indices, space).wedge(value.embed(space))
        return total

    return SimplicialForm(cover, c.degree, evaluate, max_level, "whitney", normal=True)


# --- Verification ---

def _residual(form: ExteriorForm, cover: GoodCover, simplex: tuple) -> tuple:
    domain = cover.intersection(simplex)
    exact = not form.is_numeric() and form.is_zero_on(domain.as_dict())
    points = []
    for component in domain.components():
        points.extend(component.sample_points(form.space, 2))
    worst = form.max_abs(points)
    return (exact or worst == 0.0), worst


def _level_report(name: str, per_level: dict, tol: float) -> dict:
    checks = []
    for p, (exact, worst, count) in sorted(per_level.items()):
        checks.append(make_check(f"{name} level {p} ({count} comparisons)", name, 0, "TRIVIAL",
                                 "0" if exact else f"{worst:.3e}", worst, exact or worst <= tol))
    return {"checks": checks, "pass": all(c["pass"] for c in checks)}


def verify_simplicial(s: SimplicialForm, tol: float = 1e-9, max_level: int | None = None) -> dict:
    """Face compatibility (eps^i x id)* w^(p)(I) = w^(p-1)(eps_i I)."""
    top = s.max_level if max_level is None else max_level
    per_level = {}
    for p in range(1, top + 1):
        exact_all, worst_all, count = True, 0.0, 0
        for simplex in s.cover.nerve.level(p):
            source = s.value(p, simplex)
            for i in range(p + 1):
                pulled = source.pullback(s.space(p - 1), face_map(p, i))
                exact, worst = _residual(pulled - s.value(p - 1, face(simplex, i)), s.cover, simplex)
                exact_all = exact_all and exact
                worst_all = max(worst_all, worst)
                count += 1
        per_level[p] = (exact_all, worst_all, count)
    report = _level_report("face compatibility", per_level, tol)
    if not report["pass"]:
        logging.warning(f"Simplicial form '{s.name}' fails face compatibility.")
    return report


def verify_normal(s: SimplicialForm, tol: float = 1e-9, max_level: int | None = None) -> dict:
    """Degeneracy compatibility (eta^i x id)* w^(p)(I) = w^(p+1)(eta_i I)."""
    top = s.max_level if max_level is None else max_level
    per_level = {}
    for p in range(0, top):
        exact_all, worst_all, count = True, 0.0, 0
        for simplex in s.cover.nerve.level(p):
            source = s.value(p, simplex)
            for i in range(p + 1):
                pulled = source.pullback(s.space(p + 1), codegeneracy_map(p, i))
                target = s.value(p + 1, degeneracy(simplex, i))
                exact, worst = _residual(pulled - target, s.cover, simplex)
                exact_all = exact_all and exact
                worst_all = max(worst_all, worst)
                count += 1
        per_level[p] = (exact_all, worst_all, count)
    report = _level_report("degeneracy compatibility", per_level, tol)
    s.normal = report["pass"]
    return report


# --- Integration map ---

def i_delta(s: SimplicialForm, max_level: int | None = None) -> TotalCochain:
    """I_Delta(w)^(p) = integral over Delta^p of the barycentric-degree-p part of w^(p)."""
    top = min(s.degree, s.max_level) if max_level is None else min(s.degree, max_level)
    components = []
    for nu in range(top + 1):
        values = {}
        for simplex in s.cover.nerve.nondegenerate(nu):
            value = integrate_simplex(s.value(nu, simplex), nu)
            if value.terms:
                values[simplex] = value
        components.append(CechCochain(s.cover, nu, s.degree - nu, values))
    return TotalCochain(s.cover, s.degree, components)


def is_discrete(s: SimplicialForm, max_level: int | None = None) -> tuple:
    """(flag, residual): values involve only barycentric variables on every tuple domain."""
    top = s.max_level if max_level is None else max_level
    manifold = set(s.cover.space.coords)
    worst = 0.0
    flag = True
    for p in range(top + 1):
        for simplex in s.cover.nerve.nondegenerate(p):
            form = s.value(p, simplex)
            domain = s.cover.intersection(simplex).as_dict()
            for mono, coeff in form.terms.items():
                if manifold & set(mono):
                    if not coeff.is_zero_on(domain):
                        flag = False
                        worst = max(worst, 1.0)
                    continue
                for coord in manifold & coeff.free_coords():
                    if not coeff.diff(coord).is_zero_on(domain):
                        flag = False
                        worst = max(worst, 1.0)
    return flag, worst


def is_integral(s: SimplicialForm, tol: float = 1e-9, max_level: int | None = None) -> tuple:
    """(flag, residual): discrete, and I_Delta has integer values."""
    discrete, worst = is_discrete(s, max_level)
    if not discrete:
        return False, worst
    if s.degree > s.max_level:
        return True, 0.0
    for simplex in s.cover.nerve.nondegenerate(s.degree):
        value = integrate_simplex(s.value(s.degree, simplex), s.degree)
        point = s.cover.intersection(simplex).sample_point(value.space)
        raw = value.evaluate(point).get((), 0)
        ok, residual = _is_integer_value(raw, tol)
        worst = max(worst, residual)
        if not ok:
            return False, worst
    return True, worst


# --- Gerbes ---

def gerbe_curvature(lam: SimplicialForm) -> ExteriorForm:
    """alpha: the level-0 values of d Lambda glued by the partition of unity."""
    values = {(i,): lam.value(0, (i,)).d() for (i,) in lam.cover.nerve.nondegenerate(0)}
    return glue(CechCochain(lam.cover, 0, lam.degree + 1, values))


def gerbe_beta(lam: SimplicialForm, alpha: ExteriorForm) -> SimplicialForm:
    """beta = eps* alpha - d Lambda, levelwise."""
    lifted = from_global(alpha, lam.cover, lam.max_level)
    return SimplicialForm(lam.cover, lam.degree + 1,
                          lambda p, s: lifted.value(p, s) - lam.value(p, s).d(), lam.max_level, "beta",
                          normal=True if lam.normal else None)


def verify_gerbe(lam: SimplicialForm, tol: float = 1e-9) -> dict:
    alpha = gerbe_curvature(lam)
    beta = gerbe_beta(lam, alpha)
    top = min(lam.max_level, lam.degree + 1)
    discrete, d_residual = is_discrete(beta, top)
    integral, i_residual = is_integral(beta, tol, top) if discrete else (False, d_residual)
    checks = [
        make_check("beta is discrete", "gerbe-discrete", True, "TRIVIAL", discrete, d_residual, discrete),
        make_check("beta is integral", "gerbe-integral", True, "TRIVIAL", integral, i_residual, integral),
    ]
    return {"alpha": alpha, "beta": beta, "checks": checks, "pass": discrete and integral}


def extract_gerbe(lam: SimplicialForm, tol: float = 1e-9, name: str = "extracted") -> DeligneCocycle:
    """omega^nu = integral of Lambda^(nu) over Delta^nu, theta = -omega^l."""
    report = verify_gerbe(lam, tol)
    if not report["pass"]:
        failed = [c["name"] for c in report["checks"] if not c["pass"]]
        raise NotAGerbeError(f"'{lam.name}' does not satisfy d Lambda = eps* alpha - beta: {failed}")
    level = lam.degree
    total = i_delta(lam, level)
    omega = [total.component(nu) for nu in range(level + 1)]
    theta = omega[level].scale(-1)
    theta = CechCochain(lam.cover, level, 0, dict(theta.values))
    dc = DeligneCocycle(lam.cover, level, omega, theta, name)
    dc._curvature = report["alpha"]
    logging.info(f"Extracted level-{level} Deligne cocycle '{name}' from '{lam.name}'.")
    return dc


def beta_of(lam: SimplicialForm, dc: DeligneCocycle | None = None, tol: float = 1e-9) -> IntegralCechCocycle:
    """I_Delta(beta)^(l+1) = -integral of d Lambda^(l+1); cross-checked against the Bockstein class when given."""
    level = lam.degree + 1
    values = {}
    for simplex in lam.cover.nerve.nondegenerate(level):
        values[simplex] = integrate_simplex(lam.value(level, simplex).d(), level).scale(-1)
    z = IntegralCechCocycle(lam.cover, level, integral_values(CechCochain(lam.cover, level, 0, values), tol))
    if dc is not None:
        other = bockstein_class(dc, tol)
        if other.values != z.values:
            raise InternalConsistencyError(
                f"beta of '{lam.name}' disagrees with the Bockstein class of '{dc.name}'."
            )
    return z
