"""
Family invariants Lambda_{Y/Z}(Q, B) of product fibrations Y = X x Z -> Z: the fibre
integral of the transgression, its curvature, independence of the global extension,
flat classes over base cycles and rigidity under deformations.
"""

import logging
from dataclasses import dataclass, field

import sympy as sp

from config import DEFAULT_FIBRE_CONVENTION
from .cech import DeligneCocycle, bockstein_class, curvature, glue, make_check, periods, sphere_cycle, torus_cycles
from .chern_weil import (
    FormalForm, InvariantMonomial, LineBundleData, chern_weil_form, formal_connection, formal_family_connection,
    gv_form, line_bundle_deligne, poincare_line_bundle, surface_fibre_model, torus_fibre_model, transgression,
)
from .covers import box_cover, torus_cover
from .errors import ConfigurationError, FormulaViolationError, PreconditionError
from .exterior import CoordinateSpace, ExteriorForm, as_exact, coord_symbol, factorial, log_form
from .fibre import (
    ProductFibration, classical_fibre_integral, deligne_pushforward, fibre_integrate, product_fibration,
)
from .simplicial import from_global, i_delta

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

BACKENDS = ("chart", "chart-shuffle", "formal")


# --- Family data ---

@dataclass
class FamilySpec:
    """
    A family of abelian connections on Y = X x Z. Case I carries a global 1-form B (chart) and/or
    its formal expansion; case II carries line-bundle transition data.
    """
    name: str
    space: CoordinateSpace
    fibre_coords: tuple
    Q: InvariantMonomial
    connection: ExteriorForm | None = None
    formal: FormalForm | None = None
    line_bundle: LineBundleData | None = None
    fibration: ProductFibration | None = None
    fibre_condition: object = "flat"

    @property
    def n(self) -> int:
        return self.Q.power - 1

    @property
    def fibre_dimension(self) -> int:
        if self.formal is not None and self.connection is None:
            return self.formal.model.dimension
        return len(self.fibre_coords)

    @property
    def level(self) -> int:
        """l with dim X = 2n + 1 - l."""
        return 2 * self.n + 1 - self.fibre_dimension

    @property
    def case(self) -> str:
        return "II" if self.line_bundle is not None else "I"

    @property
    def base_space(self) -> CoordinateSpace:
        return self.space.without(self.fibre_coords)

    def fibre_curvature(self) -> ExteriorForm | None:
        """Part of F_B with two fibre differentials: the curvature of the restricted connections A_z."""
        if self.line_bundle is not None:
            F = curvature(line_bundle_deligne(self.line_bundle))
        elif self.connection is not None:
            F = self.connection.d()
        else:
            return None
        return F.component(self.fibre_coords, 2)

    def verify(self) -> dict:
        """Checks the declared fibre condition F_{A_z}^r = 0 (r = 1 for flat fibres)."""
        exponent = 1 if self.fibre_condition == "flat" else int(self.fibre_condition)
        fibre = self.fibre_curvature()
        ok = True if fibre is None else fibre.power(exponent).is_zero()
        return make_check(f"fibre curvature^{exponent} = 0", "fibre-condition", 0, "TRIVIAL",
                          "0" if ok else "nonzero", 0.0 if ok else 1.0, ok)


@dataclass
class FamilyInvariant:
    name: str
    case: str
    form: ExteriorForm | None = None
    cocycle: DeligneCocycle | None = None
    backend: str = "chart"
    provenance: dict = field(default_factory=dict)

    def curvature(self) -> ExteriorForm:
        if self.cocycle is not None:
            return curvature(self.cocycle)
        return self.form.d()

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "case": self.case,
            "backend": self.backend,
            "form": self.form.to_json() if self.form is not None else None,
            "cocycle": self.cocycle.to_json() if self.cocycle is not None else None,
            "provenance": self.provenance,
        }


# --- Invariants ---

def _shuffle_invariant(spec: FamilySpec, Lam: ExteriorForm, convention: str, backend: str, order: int) -> ExteriorForm:
    fibration = spec.fibration
    lifted = from_global(Lam, fibration.product)
    pushed = fibre_integrate(lifted, fibration, convention, backend, order, max_level=1)
    return glue(i_delta(pushed, 0).component(0))


def lambda_family(spec: FamilySpec, backend: str = "chart", convention: str = DEFAULT_FIBRE_CONVENTION,
                  order: int = 8) -> FamilyInvariant:
    """Lambda_{Y/Z}(Q, B): a form on Z (case I) or a Deligne cocycle on the base cover (case II)."""
    if backend not in BACKENDS:
        raise ConfigurationError(f"Unknown backend '{backend}'. Use one of {BACKENDS}.")
    condition = spec.verify()
    if not condition["pass"]:
        raise PreconditionError(f"Family '{spec.name}' violates its declared fibre condition.")
    provenance = {"backend": backend, "convention": convention}
    if spec.fibration is not None:
        provenance["base_cover"] = spec.fibration.base.ident
        provenance["fibre_cover"] = spec.fibration.fibre.ident
    if spec.case == "II":
        if backend == "formal" or spec.fibration is None:
            raise ConfigurationError(f"Family '{spec.name}' needs the chart-shuffle backend with a fibration.")
        pushed = deligne_pushforward(line_bundle_deligne(spec.line_bundle), spec.fibration, convention)
        return FamilyInvariant(spec.name, "II", cocycle=pushed, backend="chart-shuffle", provenance=provenance)
    if backend == "formal":
        if spec.formal is None:
            raise ConfigurationError(f"Family '{spec.name}' has no formal fibre model.")
        result = formal_family_connection(spec.formal.model, spec.formal, spec.n)
        form = result["invariant"].scale(spec.Q.coeff)
    else:
        if spec.connection is None:
            raise ConfigurationError(f"Family '{spec.name}' has no chart connection; use the formal backend.")
        Lam = transgression(spec.Q, spec.connection)
        if backend == "chart":
            form = classical_fibre_integral(Lam, spec.fibre_coords)
        else:
            if spec.fibration is None:
                raise ConfigurationError(f"Family '{spec.name}' has no covers for the chart-shuffle backend.")
            form = _shuffle_invariant(spec, Lam, convention, "exact", order)
    log_form(f"Family invariant of '{spec.name}' ({backend})", form)
    return FamilyInvariant(spec.name, "I", form=form, backend=backend, provenance=provenance)


def characteristic_integral(spec: FamilySpec) -> ExteriorForm:
    """int_{Y/Z} Q(F_B^(n+1))."""
    if spec.case == "II":
        F = curvature(line_bundle_deligne(spec.line_bundle))
        return classical_fibre_integral(chern_weil_form(spec.Q, F), spec.fibre_coords)
    if spec.connection is not None:
        return classical_fibre_integral(chern_weil_form(spec.Q, spec.connection.d()), spec.fibre_coords)
    return formal_family_connection(spec.formal.model, spec.formal, spec.n)["characteristic"].scale(spec.Q.coeff)


def curvature_check(inv: FamilyInvariant, spec: FamilySpec) -> dict:
    """int_{Y/Z} Q(F^(n+1)) - (-1)^(l-1) d Lambda_{Y/Z}; curvatures of case II are normalized, no correction term."""
    sign = -1 if (spec.level - 1) % 2 else 1
    lhs = characteristic_integral(spec)
    rhs = inv.curvature().scale(sign)
    difference = lhs - rhs
    ok = difference.is_zero()
    return make_check(f"int Q(F^{spec.n + 1}) = (-1)^(l-1) d Lambda_Y/Z", "curvature-formula", repr(lhs), "DERIVED",
                      repr(rhs), 0.0 if ok else 1.0, ok)


def _class_is_trivial(a: ExteriorForm) -> tuple:
    closed = a.d().is_zero()
    if not closed:
        return False, False
    cycles = torus_cycles(a.space, a.degree) if a.degree > 0 else []
    return True, all(v == 0 for v in periods(a, cycles))


def extension_independence(spec: FamilySpec, B0: ExteriorForm, B1: ExteriorForm) -> dict:
    """Compares the invariants of two global extensions with the same fibre restrictions."""
    if not (B1 - B0).component(spec.fibre_coords, 1).is_zero():
        raise PreconditionError("The two extensions restrict to different fibre connections.")
    exponent = spec.n + 1 - spec.level
    hypothesis = all(B.d().component(spec.fibre_coords, 2).power(exponent).is_zero() for B in (B0, B1))
    inv0 = classical_fibre_integral(transgression(spec.Q, B0), spec.fibre_coords)
    inv1 = classical_fibre_integral(transgression(spec.Q, B1), spec.fibre_coords)
    difference = inv1 - inv0
    closed, periods_vanish = _class_is_trivial(difference)
    trivial = closed and periods_vanish
    if not hypothesis:
        logging.warning(f"Extension independence probed outside its hypothesis for '{spec.name}'.")
    return {
        "hypothesis": hypothesis,
        "difference": difference,
        "closed": closed,
        "trivial": trivial,
        "check": make_check("Lambda(B1) - Lambda(B0) is exact", "extension-independence", 0, "DERIVED",
                            "exact" if trivial else repr(difference), 0.0 if trivial else 1.0,
                            trivial == hypothesis),
    }


def flat_class(form: ExteriorForm, cycles: list) -> list:
    """Normalized periods of the restrictions of `form` to closed cycles, each restriction required closed."""
    values = []
    for cycle in cycles:
        if cycle.params.dimension != form.degree:
            raise PreconditionError(f"Cycle {cycle.name} has dimension {cycle.params.dimension}, "
                                    f"the form has degree {form.degree}.")
        restricted = cycle.pull(form)
        if not restricted.d().is_zero():
            raise FormulaViolationError(f"The restriction to {cycle.name} is not closed.")
        values.append(sp.nsimplify(sp.simplify(cycle.integrate(form) / cycle.volume)))
    return values


def foliated_family_scenario(spec: FamilySpec, points: list) -> dict:
    """Invariant of a family of flat fibre connections and its values at base points."""
    inv = lambda_family(spec)
    samples = [{str(m): str(v) for m, v in inv.form.evaluate(point).items()} for point in points]
    return {"invariant": inv, "samples": samples, "varies": len({tuple(sorted(s.items())) for s in samples}) > 1}


def rigidity_probe(builder, parameters, point: dict, cycles=None) -> dict:
    """
    Evaluates the flat class of builder(s) at each parameter. For l = 0 the class is the
    value at `point`; otherwise the periods over `cycles`. The class is rigid when the margin
    n - l is positive; a path with margin 0 serves as a control whose class may move.
    """
    values, margins = [], set()
    for s in parameters:
        spec = builder(s)
        margins.add(spec.n - spec.level)
        inv = lambda_family(spec)
        if inv.form.degree == 0:
            value = inv.form.evaluate(point).get((), sp.Integer(0))
            values.append((sp.nsimplify(value),))
        else:
            values.append(tuple(flat_class(inv.form, cycles)))
    if len(margins) != 1:
        raise PreconditionError("The deformation path changes n - l.")
    constant = len(set(values)) == 1
    return {"values": [[str(v) for v in row] for row in values], "constant": constant, "margin": margins.pop(),
            "check": make_check("flat class constant along the deformation", "rigidity", str(values[0]),
                                "DERIVED", str(values[-1]), 0.0 if constant else 1.0, constant)}


def functoriality(form: ExteriorForm, coords, degree: int) -> dict:
    """Pullback along the degree-d covering of each listed circle factor multiplies top periods by d^k."""
    mapping = {c: degree * coord_symbol(c) for c in coords}
    pulled = form.pullback(form.space, mapping)
    cycles = torus_cycles(form.space, form.degree)
    before, after = periods(form, cycles), periods(pulled, cycles)
    factor = sp.Integer(degree) ** form.degree
    ok = all(sp.simplify(b * factor - a) == 0 for a, b in zip(after, before))
    return {"before": [str(v) for v in before], "after": [str(v) for v in after], "factor": str(factor),
            "check": make_check(f"periods scale by {degree}^{form.degree}", "functoriality", str(factor),
                                "DERIVED", [str(v) for v in after], 0.0 if ok else 1.0, ok)}


def gv_fibre_integral(beta: ExteriorForm, n: int, fibre_coords) -> tuple:
    """Fibrewise Godbillon-Vey invariant int_X beta ^ (d beta)^n with the identity report of the form."""
    form, report = gv_form(beta, n)
    return classical_fibre_integral(form, fibre_coords), report


# --- Example families ---

def torus_family(k: int, n_arcs: int = 3, overlap="1/24", pou: str = "c1cubic", box=("-1", "1"),
                 power: int | None = None, extra: ExteriorForm | None = None, covers: bool = True) -> FamilySpec:
    """B = sum_j z_j dx_j on T^k x R^k with Q = xi^power (default k, giving l = k - 1)."""
    xs = [f"x{j}" for j in range(1, k + 1)]
    zs = [f"z{j}" for j in range(1, k + 1)]
    base = box_cover(zs, [box] * k)
    fibre = torus_cover(xs, n_arcs, overlap, pou)
    fibration = product_fibration(base, fibre) if covers else None
    space = fibration.product.space if covers else fibre.space.product(base.space)
    B = ExteriorForm.from_terms(space, [(coord_symbol(z), [x]) for x, z in zip(xs, zs)])
    if extra is not None:
        B = B + extra
    model = torus_fibre_model(k)
    formal = formal_connection(model, space.without(xs), {f"e{j}": coord_symbol(f"z{j}") for j in range(1, k + 1)})
    power = k if power is None else power
    return FamilySpec(f"torus_k{k}", space, tuple(xs), InvariantMonomial(power), B, formal, None, fibration)


def genus_family(g: int) -> FamilySpec:
    """B = sum_i z_{2i-1} a_i + z_{2i} b_i over a genus-g surface, base R^(2g); formal backend only."""
    zs = [f"z{j}" for j in range(1, 2 * g + 1)]
    base = box_cover(zs).space
    model = surface_fibre_model(g)
    coefficients = {}
    for i in range(1, g + 1):
        coefficients[f"a{i}"] = coord_symbol(f"z{2 * i - 1}")
        coefficients[f"b{i}"] = coord_symbol(f"z{2 * i}")
    formal = formal_connection(model, base, coefficients)
    return FamilySpec(f"genus_{g}", base, (), InvariantMonomial(2), None, formal)


def expected_genus_invariant(g: int, space: CoordinateSpace) -> ExteriorForm:
    terms = []
    for i in range(1, g + 1):
        odd, even = f"z{2 * i - 1}", f"z{2 * i}"
        terms += [(coord_symbol(even), [odd]), (-coord_symbol(odd), [even])]
    return ExteriorForm.from_terms(space, terms, degree=1)


def expected_torus_invariant(k: int, space: CoordinateSpace) -> ExteriorForm:
    """(-1)^C(k,2) (k-1)! sum_j (-1)^(j-1) z_j dz_1 ^ .. omit j .. ^ dz_k."""
    zs = [f"z{j}" for j in range(1, k + 1)]
    coefficient = (-1) ** (k * (k - 1) // 2) * factorial(k - 1)
    terms = [((-1) ** j * coefficient * coord_symbol(z), [c for c in zs if c != z]) for j, z in enumerate(zs)]
    return ExteriorForm.from_terms(space, terms, degree=k - 1)


def poincare_family(n_fibre: int = 3, n_base: int = 3, overlap="1/24", pou: str = "c1cubic",
                    power: int = 1) -> FamilySpec:
    """Poincare bundle (or its tensor power) on T x T^, pushed to T^; Q = xi gives l = 0."""
    lb, base, fibre = poincare_line_bundle(n_fibre, n_base, overlap, pou)
    if power != 1:
        lb = lb.tensor_power(power)
    fibration = ProductFibration(base, fibre, lb.cover)
    return FamilySpec(f"poincare^{power}", fibration.product.space, ("x",), InvariantMonomial(1),
                      line_bundle=lb, fibration=fibration)


def poincare_pairing(inv: FamilyInvariant) -> int:
    """Bockstein class of the pushed cocycle evaluated on the base fundamental cycle."""
    z = bockstein_class(inv.cocycle)
    return z.pair(inv.cocycle.cover.fundamental_cycle())


def rigidity_family(s) -> FamilySpec:
    """T^3 fibre with flat fibre connections B_s = sum_j (z_j + s w_j(z)) dx_j and Q = xi^2 (l = 0)."""
    s = as_exact(s)
    xs, zs = ["x1", "x2", "x3"], ["z1", "z2", "z3"]
    space = torus_cover(xs, 3).space.product(box_cover(zs).space)
    z = [coord_symbol(c) for c in zs]
    deformation = [z[1] ** 2, z[0] * z[2], z[0] + z[1]]
    B = ExteriorForm.from_terms(space, [(z[j] + s * deformation[j], [xs[j]]) for j in range(3)])
    return FamilySpec(f"rigidity(s={s})", space, tuple(xs), InvariantMonomial(2), B)


def dilation_family(s) -> FamilySpec:
    """T^2 fibre with B_s = (1 + s) z1 dx1 + z2 dx2 and Q = xi^2: l = 1 = n, so the circle period moves."""
    s = as_exact(s)
    spec = torus_family(2, covers=False)
    z1, z2 = coord_symbol("z1"), coord_symbol("z2")
    B = ExteriorForm.from_terms(spec.space, [((1 + s) * z1, ["x1"]), (z2, ["x2"])])
    return FamilySpec(f"dilation(s={s})", spec.space, spec.fibre_coords, spec.Q, B)


def negative_control_extensions(kappa=1) -> tuple:
    """
    Extensions of the same fibre connections whose fibres are not flat: the fibre term
    kappa sin(2 pi x1) dx2 breaks the hypothesis and the invariants differ by a non-closed form.
    """
    spec = torus_family(2, covers=False)
    space = spec.space
    x1, z2 = coord_symbol("x1"), coord_symbol("z2")
    B0 = spec.connection + ExteriorForm.from_terms(space, [(as_exact(kappa) * sp.sin(2 * sp.pi * x1), ["x2"])])
    B1 = B0 + ExteriorForm.from_terms(space, [(z2 * sp.cos(2 * sp.pi * x1), ["z1"])])
    return spec, B0, B1


def sphere_restriction(k: int, space: CoordinateSpace):
    """The unit sphere S^(k-1) in the base R^k with its normalized volume."""
    return sphere_cycle(k, space)
