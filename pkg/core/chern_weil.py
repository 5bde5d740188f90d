"""
Chern-Weil forms and transgressions for abelian structure groups, line-bundle
Deligne cocycles, and a formal backend computing in forms on the base tensored
with the cohomology of the fibre.
"""

import itertools
import logging
from dataclasses import dataclass, field
from math import comb

import sympy as sp

from .cech import CechCochain, DeligneCocycle, cech_delta, cochain_residual, make_check, periods, torus_cycles
from .covers import GoodCover, build_circle_cover, product_cover
from .errors import FormulaViolationError, NotACocycleError, PreconditionError
from .exterior import (
    CoeffExpr, CoordinateSpace, ExteriorForm, as_exact, coord_symbol, factorial, periodic_space,
)

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')


# --- Invariant polynomials ---

@dataclass(frozen=True)
class InvariantMonomial:
    """Q(xi) = coeff * xi^power on the abelian Lie algebra; `factors` records a product decomposition."""
    power: int
    coeff: sp.Expr = sp.Integer(1)
    factors: tuple = ()

    def __post_init__(self):
        if self.power < 0:
            raise PreconditionError(f"An invariant monomial needs a non-negative degree, got {self.power}.")
        object.__setattr__(self, "coeff", as_exact(self.coeff))

    def times(self, other: "InvariantMonomial") -> "InvariantMonomial":
        return InvariantMonomial(self.power + other.power, self.coeff * other.coeff, (self, other))

    def __repr__(self):
        return f"{self.coeff}*xi^{self.power}"


def chern_weil_form(Q: InvariantMonomial, F: ExteriorForm) -> ExteriorForm:
    """Q(F^(n+1)) = coeff * F^(n+1) for an abelian curvature F."""
    if F.degree != 2 and F.terms:
        raise PreconditionError(f"Curvature must be a 2-form, got degree {F.degree}.")
    return F.power(Q.power).scale(Q.coeff)


def cs_transgression_abelian(B: ExteriorForm, n: int) -> ExteriorForm:
    """Lambda = B ^ (dB)^n, with d(Lambda) = (dB)^(n+1)."""
    if B.degree != 1 and B.terms:
        raise PreconditionError(f"Connection must be a 1-form, got degree {B.degree}.")
    return B.wedge(B.d().power(n))


def transgression(Q: InvariantMonomial, B: ExteriorForm) -> ExteriorForm:
    if Q.power == 0:
        raise PreconditionError("A degree-0 invariant polynomial has no transgression.")
    return cs_transgression_abelian(B, Q.power - 1).scale(Q.coeff)


def _exactness_witness(a: ExteriorForm) -> tuple:
    """(closed, all torus periods vanish). On contractible charts closedness is all there is."""
    if not a.d().is_zero():
        return False, False
    cycles = torus_cycles(a.space, a.degree) if a.degree > 0 else []
    values = periods(a, cycles) if cycles else []
    return True, all(v == 0 for v in values)


def variational_delta(Q: InvariantMonomial, A0: ExteriorForm, A1: ExteriorForm) -> tuple:
    """
    Bulk term (n+1) int_0^1 Q(a ^ F_t^n) dt along A_t = A0 + t a, a = A1 - A0, and whether
    Lambda(Q, A1) - Lambda(Q, A0) - bulk is exact. The t-integral is done termwise:
    F_t^n = sum_k C(n, k) t^k (da)^k F0^(n-k).
    """
    n = Q.power - 1
    a = A1 - A0
    F0, da = A0.d(), a.d()
    bulk = ExteriorForm.zero(A0.space, 2 * n + 1)
    for k in range(n + 1):
        weight = sp.Rational(comb(n, k), k + 1)
        term = a.wedge(da.power(k)).wedge(F0.power(n - k))
        bulk = bulk + term.scale(weight)
    bulk = bulk.scale((n + 1) * Q.coeff)
    difference = transgression(Q, A1) - transgression(Q, A0) - bulk
    closed, periods_vanish = _exactness_witness(difference)
    if not closed:
        raise FormulaViolationError("Lambda(A1) - Lambda(A0) - bulk is not closed.")
    return bulk, closed and periods_vanish


def product_identity_check(Q1: InvariantMonomial, Q2: InvariantMonomial, B: ExteriorForm) -> dict:
    """Lambda(Q1 Q2, B) against Q1(F) ^ Lambda(Q2, B), compared up to exact forms."""
    F = B.d()
    lhs = transgression(Q1.times(Q2), B)
    rhs = chern_weil_form(Q1, F).wedge(transgression(Q2, B))
    difference = lhs - rhs
    on_the_nose = difference.is_zero()
    closed, periods_vanish = _exactness_witness(difference)
    passed = on_the_nose or (closed and periods_vanish)
    return make_check("Lambda(Q1 Q2) = Q1(F) ^ Lambda(Q2) mod exact", "product-identity", 0, "DERIVED",
                      "0" if on_the_nose else "exact difference" if passed else "nonzero class",
                      0.0 if passed else 1.0, passed)


def gv_form(beta: ExteriorForm, n: int) -> tuple:
    """beta ^ (d beta)^n together with the identity check d(Lambda) = d beta ^ (d beta)^n."""
    form = cs_transgression_abelian(beta, n)
    dbeta = beta.d()
    residual_form = form.d() - dbeta.wedge(dbeta.power(n))
    ok = residual_form.is_zero()
    report = make_check(f"d(beta ^ (d beta)^{n}) = d beta ^ Q(F^{n})", "gv-identity", 0, "TRIVIAL",
                        "0" if ok else repr(residual_form), 0.0 if ok else 1.0, ok)
    return form, report


# --- Line bundles ---

def coordinate_lift(factor, element: int) -> CoeffExpr:
    """
    Real lift of the circle coordinate on arc `element`: values within 1/2 of the arc centre,
    with the jump placed at the antipode of the centre.
    """
    coord = factor.coords[0]
    x = coord_symbol(coord)
    centre = sp.Rational(element, factor.size)
    antipode = (centre + sp.Rational(1, 2)) % 1
    if antipode == 0:
        return CoeffExpr.of(x)
    if centre < sp.Rational(1, 2):
        return CoeffExpr.piecewise(coord, [antipode], [x, x - 1], "none")
    return CoeffExpr.piecewise(coord, [antipode], [x + 1, x], "none")


@dataclass
class LineBundleData:
    """
    Local connection 1-forms A_i and real phase lifts g_ij (0-forms) of the transitions:
    A_j - A_i = d g_ij on overlaps and g_ij + g_jk - g_ik integral on triples.
    """
    cover: GoodCover
    connection: dict
    phases: dict = field(default_factory=dict)
    name: str = "line bundle"

    def check(self, tol: float = 1e-9) -> dict:
        omega0 = CechCochain(self.cover, 0, 1, {(i,): a for i, a in self.connection.items()})
        omega1 = CechCochain(self.cover, 1, 0, dict(self.phases))
        gauge = cochain_residual(cech_delta(omega0) - omega1.d())
        checks = [make_check("A_j - A_i = d g_ij", "line-bundle-gauge", 0, "TRIVIAL",
                             "0" if gauge["exact_zero"] else f"{gauge['residual']:.3e}", gauge["residual"],
                             gauge["exact_zero"] or gauge["residual"] <= tol)]
        triple = cech_delta(omega1)
        flat = cochain_residual(triple.d())
        integral = True
        for simplex in triple.tuples():
            point = self.cover.intersection(simplex).sample_point(self.cover.space)
            value = triple.value(simplex).evaluate(point).get((), 0)
            integral = integral and sp.nsimplify(value).is_Integer
        checks.append(make_check("g_ij g_jk g_ki = 1", "line-bundle-cocycle", "Z", "TRIVIAL",
                                 "integral" if integral else "non-integral", flat["residual"],
                                 integral and (flat["exact_zero"] or flat["residual"] <= tol)))
        return {"checks": checks, "pass": all(c["pass"] for c in checks)}

    def tensor_power(self, m: int) -> "LineBundleData":
        return LineBundleData(self.cover, {i: a.scale(m) for i, a in self.connection.items()},
                              {s: g.scale(m) for s, g in self.phases.items()}, f"{self.name}^{m}")


def line_bundle_deligne(lb: LineBundleData, tol: float = 1e-9) -> DeligneCocycle:
    """Level-1 cocycle: omega^0 = A, omega^1 = g, theta = -g."""
    report = lb.check(tol)
    if not report["pass"]:
        failed = [c["name"] for c in report["checks"] if not c["pass"]]
        raise NotACocycleError(f"Transition data of '{lb.name}' violates {failed}.")
    omega0 = CechCochain(lb.cover, 0, 1, {(i,): a for i, a in lb.connection.items()})
    omega1 = CechCochain(lb.cover, 1, 0, dict(lb.phases))
    return DeligneCocycle(lb.cover, 1, [omega0, omega1], omega1.scale(-1), lb.name)


def poincare_line_bundle(n_fibre: int = 3, n_base: int = 3, overlap="1/24", pou: str = "c1cubic",
                         fibre_coord: str = "x", base_coord: str = "xi") -> tuple:
    """
    Poincare bundle on T x T^ (curvature d xi ^ dx, normalized). Returns (bundle, base cover, fibre cover);
    elements of the product cover are (base arc, fibre arc) pairs.
    """
    base = build_circle_cover(n_base, overlap, base_coord, pou)
    fibre = build_circle_cover(n_fibre, overlap, fibre_coord, pou)
    cover = product_cover(base, fibre)
    space = cover.space
    base_factor, fibre_factor = base.factors[0], fibre.factors[0]
    xi_lifts = [coordinate_lift(base_factor, i) for i in range(base.size)]
    x_lifts = [coordinate_lift(fibre_factor, a) for a in range(fibre.size)]
    connection = {}
    for pos in range(cover.size):
        i, _ = cover.label(pos)
        connection[pos] = ExteriorForm(space, {(fibre_coord,): xi_lifts[i]}, 1)
    phases = {}
    for simplex in cover.nerve.nondegenerate(1):
        (i, a), (j, _) = cover.label(simplex[0]), cover.label(simplex[1])
        if i == j:
            continue
        phases[simplex] = ExteriorForm.function(space, (xi_lifts[j] - xi_lifts[i]) * x_lifts[a])
    logging.info(f"Built Poincare bundle on a {cover.size}-element product cover.")
    return LineBundleData(cover, connection, phases, "poincare"), base, fibre


def poincare_curvature(k: int) -> tuple:
    """(space, F) with F = sum_j d xi_j ^ dx_j on T^k x T^k, fibre coordinates first."""
    xs = [f"x{j}" for j in range(1, k + 1)]
    xis = [f"xi{j}" for j in range(1, k + 1)]
    space = periodic_space(f"T{k}xT^{k}", xs + xis)
    F = ExteriorForm.from_terms(space, [(1, [xi, x]) for x, xi in zip(xs, xis)], degree=2)
    return space, F


def poincare_curvature_only(k: int) -> dict:
    """int over the fibre torus of F^k; expected (-1)^(k(k+1)/2) k! d xi_1 ^ .. ^ d xi_k."""
    space, F = poincare_curvature(k)
    fibre = [f"x{j}" for j in range(1, k + 1)]
    integrated = F.power(k).integrate_fibre(fibre)
    coefficient = sp.Integer((-1) ** (k * (k + 1) // 2) * factorial(k))
    expected = ExteriorForm.from_terms(integrated.space, [(coefficient, [f"xi{j}" for j in range(1, k + 1)])])
    return {"form": integrated, "expected": expected, "coefficient": coefficient,
            "pass": integrated.equals(expected)}


# --- Formal fibre cohomology ---

@dataclass(frozen=True)
class FormalFiberModel:
    """
    Graded-commutative algebra H*(X) with a basis, structure constants
    {(a, b): {c: coefficient}} and the top pairing {c: int_X c}.
    """
    name: str
    degrees: dict
    products: dict
    pairing: dict
    unit: str = "1"

    @property
    def dimension(self) -> int:
        return max(self.degrees.values())

    def multiply(self, a: str, b: str) -> dict:
        if a == self.unit:
            return {b: 1}
        if b == self.unit:
            return {a: 1}
        return self.products.get((a, b), {})

    def check(self) -> dict:
        """Graded commutativity and associativity on all basis pairs and triples."""
        basis = list(self.degrees)
        commutative = True
        for a, b in itertools.product(basis, repeat=2):
            sign = (-1) ** (self.degrees[a] * self.degrees[b])
            ab, ba = self.multiply(a, b), self.multiply(b, a)
            if any(ab.get(c, 0) != sign * ba.get(c, 0) for c in set(ab) | set(ba)):
                commutative = False
        associative = True
        for a, b, c in itertools.product(basis, repeat=3):
            left, right = {}, {}
            for ab, x in self.multiply(a, b).items():
                for abc, y in self.multiply(ab, c).items():
                    left[abc] = left.get(abc, 0) + x * y
            for bc, x in self.multiply(b, c).items():
                for abc, y in self.multiply(a, bc).items():
                    right[abc] = right.get(abc, 0) + x * y
            if any(left.get(k, 0) != right.get(k, 0) for k in set(left) | set(right)):
                associative = False
        return {"graded_commutative": commutative, "associative": associative}


def torus_fibre_model(k: int) -> FormalFiberModel:
    """H*(T^k): exterior algebra on e1..ek, oriented by e1 ^ .. ^ ek."""
    subsets = [s for r in range(k + 1) for s in itertools.combinations(range(1, k + 1), r)]

    def label(s):
        return "1" if not s else "e" + "".join(str(i) for i in s)

    degrees = {label(s): len(s) for s in subsets}
    products = {}
    for s, t in itertools.product(subsets, repeat=2):
        if not s or not t or set(s) & set(t):
            continue
        merged = list(s + t)
        inversions = sum(1 for i, j in itertools.combinations(range(len(merged)), 2) if merged[i] > merged[j])
        products[(label(s), label(t))] = {label(tuple(sorted(merged))): (-1) ** inversions}
    top = label(tuple(range(1, k + 1)))
    return FormalFiberModel(f"T{k}", degrees, products, {top: 1})


def surface_fibre_model(g: int) -> FormalFiberModel:
    """H* of a closed genus-g surface with a symplectic basis: int a_i ^ b_j = delta_ij."""
    degrees = {"1": 0, "vol": 2}
    products = {}
    for i in range(1, g + 1):
        degrees[f"a{i}"] = 1
        degrees[f"b{i}"] = 1
        products[(f"a{i}", f"b{i}")] = {"vol": 1}
        products[(f"b{i}", f"a{i}")] = {"vol": -1}
    return FormalFiberModel(f"Sigma{g}", degrees, products, {"vol": 1})


@dataclass
class FormalForm:
    """Element of Omega*(Z) (x) H*(X): {basis element: form on Z}, forms written to the left."""
    model: FormalFiberModel
    space: CoordinateSpace
    components: dict

    def total_degree(self) -> int | None:
        for basis, form in self.components.items():
            if form.terms:
                return form.degree + self.model.degrees[basis]
        return None

    def __add__(self, other: "FormalForm") -> "FormalForm":
        components = dict(self.components)
        for basis, form in other.components.items():
            components[basis] = components[basis] + form if basis in components else form
        return FormalForm(self.model, self.space, components)

    def __sub__(self, other: "FormalForm") -> "FormalForm":
        return self + other.scale(-1)

    def scale(self, factor) -> "FormalForm":
        return FormalForm(self.model, self.space, {b: f.scale(factor) for b, f in self.components.items()})

    def wedge(self, other: "FormalForm") -> "FormalForm":
        components = {}
        for (a, fa), (b, fb) in itertools.product(self.components.items(), other.components.items()):
            product = self.model.multiply(a, b)
            if not product or not fa.terms or not fb.terms:
                continue
            # (fa (x) a)(fb (x) b) = (-1)^(|a| |fb|) fa ^ fb (x) ab
            sign = (-1) ** (self.model.degrees[a] * fb.degree)
            base = fa.wedge(fb).scale(sign)
            for c, coeff in product.items():
                term = base.scale(coeff)
                components[c] = components[c] + term if c in components else term
        return FormalForm(self.model, self.space, components)

    def power(self, n: int) -> "FormalForm":
        result = FormalForm(self.model, self.space, {self.model.unit: ExteriorForm.function(self.space, 1)})
        for _ in range(n):
            result = result.wedge(self)
        return result

    def d(self) -> "FormalForm":
        return FormalForm(self.model, self.space, {b: f.d() for b, f in self.components.items()})

    def integrate_fibre(self) -> ExteriorForm:
        """Pairs the top-degree classes; form differentials stay left of the fibre class."""
        m = self.model.dimension
        result = None
        for basis, form in self.components.items():
            if self.model.degrees[basis] != m or not form.terms:
                continue
            if basis not in self.model.pairing:
                raise PreconditionError(f"Top-degree class '{basis}' of model '{self.model.name}' is unpaired.")
            term = form.scale(self.model.pairing[basis] * (-1) ** (form.degree * m))
            result = term if result is None else result + term
        if result is None:
            degree = (self.total_degree() or m) - m
            return ExteriorForm.zero(self.space, max(degree, 0))
        return result


def formal_connection(model: FormalFiberModel, space: CoordinateSpace, coefficients: dict,
                      base_part: ExteriorForm | None = None) -> FormalForm:
    """B = sum_a f_a(z) gamma_a + (base 1-form) (x) 1, with f_a given as expressions on Z."""
    components = {}
    for basis, expr in coefficients.items():
        if model.degrees[basis] != 1:
            raise PreconditionError(f"Connection coefficients must sit on degree-1 classes, '{basis}' has degree "
                                    f"{model.degrees[basis]}.")
        components[basis] = ExteriorForm.function(space, as_exact(expr))
    if base_part is not None:
        components[model.unit] = base_part
    return FormalForm(model, space, components)


def formal_family_connection(model: FormalFiberModel, B: FormalForm, n: int) -> dict:
    """Curvature dB, transgression B (dB)^n, and their fibre integrals as forms on Z."""
    curvature = B.d()
    transgression_form = B.wedge(curvature.power(n))
    invariant = transgression_form.integrate_fibre()
    characteristic = curvature.power(n + 1).integrate_fibre()
    logging.info(f"Formal family on '{model.name}': invariant of degree {invariant.degree}.")
    return {"curvature": curvature, "transgression": transgression_form, "invariant": invariant,
            "invariant_curvature": invariant.d(), "characteristic": characteristic}


# --- Holonomy ---

def holonomy(B: ExteriorForm, fibre_coords, lattice_vector, base_point: dict) -> sp.Expr:
    """exp of the integral of B along the straight fibre loop s -> s * lattice_vector at a base point."""
    s = coord_symbol("s")
    params = CoordinateSpace("loop", ("s",), ("affine",), ((sp.Integer(0), sp.Integer(1)),))
    mapping = {c: as_exact(v) for c, v in base_point.items() if c in B.space.coords}
    for coord, winding in zip(fibre_coords, lattice_vector):
        mapping[coord] = as_exact(winding) * s
    for coord in B.space.coords:
        mapping.setdefault(coord, sp.Integer(0))
    exponent = B.pullback(params, mapping).integrate_fibre(["s"])
    value = exponent.terms[()].pieces[()] if () in exponent.terms else sp.Integer(0)
    return sp.exp(sp.simplify(value))


def formal_holonomy(B: FormalForm, loop: dict, base_point: dict) -> sp.Expr:
    """exp(sum_a <loop, gamma_a> f_a(z)) for a loop given by its pairings with the degree-1 classes."""
    exponent = sp.Integer(0)
    for basis, form in B.components.items():
        if B.model.degrees[basis] != 1 or basis not in loop:
            continue
        exponent += as_exact(loop[basis]) * form.evaluate(base_point).get((), 0)
    return sp.exp(sp.simplify(exponent))


def holonomy_homomorphism_check(B: ExteriorForm, fibre_coords, lattice, base_point: dict) -> dict:
    """h(l + l') = h(l) h(l') on all pairs of the given lattice vectors."""
    worst = 0.0
    for a, b in itertools.combinations_with_replacement(lattice, 2):
        total = [x + y for x, y in zip(a, b)]
        lhs = holonomy(B, fibre_coords, total, base_point)
        rhs = holonomy(B, fibre_coords, a, base_point) * holonomy(B, fibre_coords, b, base_point)
        gap = sp.simplify(lhs - rhs)
        if gap != 0:
            worst = max(worst, abs(complex(gap)))
    return make_check("holonomy is a homomorphism on the lattice", "holonomy-law", 0, "TRIVIAL",
                      "0" if worst == 0 else f"{worst:.3e}", worst, worst == 0)
