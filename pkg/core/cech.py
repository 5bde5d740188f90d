"""
Cech-deRham bicomplex, Deligne cocycles, curvature, Bockstein class and periods.

Cochains are normalized: they carry values on strictly increasing nerve tuples only
and read as zero on degenerate ones. A value is a form on the whole model space;
only its restriction to the tuple's intersection domain is meaningful.
"""

import itertools
import logging
from dataclasses import dataclass, field

import sympy as sp

from .covers import GoodCover, face, is_degenerate
from .errors import IntegralityError, NotACocycleError, NotClosedError, PreconditionError, SpaceMismatchError
from .exterior import (
    ANGULAR, AFFINE, CoordinateSpace, ExteriorForm, coord_symbol, factorial,
)

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

RESIDUAL_SAMPLES = 2


# --- Cochains ---

@dataclass
class CechCochain:
    cover: GoodCover
    p: int
    q: int
    values: dict = field(default_factory=dict)

    @property
    def bidegree(self) -> tuple:
        return self.p, self.q

    def value(self, simplex: tuple) -> ExteriorForm:
        if is_degenerate(simplex) or simplex not in self.values:
            return ExteriorForm.zero(self.cover.space, self.q)
        return self.values[simplex]

    def tuples(self) -> list:
        return self.cover.nerve.nondegenerate(self.p)

    def _combine(self, other: "CechCochain", sign: int) -> "CechCochain":
        if self.bidegree != other.bidegree:
            raise SpaceMismatchError(f"Cannot add cochains of bidegrees {self.bidegree} and {other.bidegree}.")
        values = {}
        for simplex in set(self.values) | set(other.values):
            values[simplex] = self.value(simplex) + other.value(simplex).scale(sign)
        return CechCochain(self.cover, self.p, self.q, values)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, factor) -> "CechCochain":
        return CechCochain(self.cover, self.p, self.q, {s: v.scale(factor) for s, v in self.values.items()})

    def d(self) -> "CechCochain":
        return CechCochain(self.cover, self.p, self.q + 1, {s: v.d() for s, v in self.values.items()})

    def to_json(self) -> dict:
        return {
            "bidegree": [self.p, self.q],
            "values": [{"tuple": list(s), "form": v.to_json()} for s, v in sorted(self.values.items())],
        }


def zero_cochain(cover: GoodCover, p: int, q: int) -> CechCochain:
    return CechCochain(cover, p, q, {})


def cech_delta(c: CechCochain) -> CechCochain:
    """(delta c)(i_0..i_{p+1}) = sum_nu (-1)^nu c(i_0..^i_nu..i_{p+1})."""
    values = {}
    for simplex in c.cover.nerve.nondegenerate(c.p + 1):
        total = ExteriorForm.zero(c.cover.space, c.q)
        for nu in range(c.p + 2):
            term = c.value(face(simplex, nu))
            total = total + (term if nu % 2 == 0 else -term)
        values[simplex] = total
    return CechCochain(c.cover, c.p + 1, c.q, values)


def total_D(c: CechCochain) -> tuple:
    """Components of D = delta + (-1)^p d: the (p+1, q) part and the (p, q+1) part."""
    dc = c.d()
    return cech_delta(c), dc if c.p % 2 == 0 else dc.scale(-1)


def epsilon_star(a: ExteriorForm, cover: GoodCover) -> CechCochain:
    if a.space != cover.space:
        a = a.embed(cover.space)
    return CechCochain(cover, 0, a.degree, {simplex: a for simplex in cover.nerve.nondegenerate(0)})


@dataclass
class TotalCochain:
    """Total-degree-n cochain: components[nu] has bidegree (nu, n - nu)."""
    cover: GoodCover
    degree: int
    components: list

    def component(self, nu: int) -> CechCochain:
        if 0 <= nu < len(self.components):
            return self.components[nu]
        return zero_cochain(self.cover, nu, self.degree - nu)


def total_differential(c: TotalCochain) -> TotalCochain:
    n = c.degree
    components = []
    for nu in range(n + 2):
        target = zero_cochain(c.cover, nu, n + 1 - nu)
        if nu >= 1:
            target = target + cech_delta(c.component(nu - 1))
        if nu <= n:
            dc = c.component(nu).d()
            target = target + (dc if nu % 2 == 0 else dc.scale(-1))
        components.append(target)
    return TotalCochain(c.cover, n + 1, components)


# --- Residuals ---

def _domain_points(cover: GoodCover, simplex: tuple, count: int = RESIDUAL_SAMPLES) -> list:
    points = []
    for component in cover.intersection(simplex).components():
        points.extend(component.sample_points(cover.space, count))
    return points


def cochain_residual(c: CechCochain) -> dict:
    """Exact-zero flag on every tuple domain plus max |coefficient| at sample points."""
    exact_zero = True
    worst = 0.0
    for simplex in c.tuples():
        form = c.value(simplex)
        domain = c.cover.intersection(simplex).as_dict()
        if not form.is_numeric() and not form.is_zero_on(domain):
            exact_zero = False
        worst = max(worst, form.max_abs(_domain_points(c.cover, simplex)))
    if any(v.is_numeric() for v in c.values.values()):
        exact_zero = worst == 0.0
    return {"exact_zero": exact_zero, "residual": worst}


def make_check(name: str, ref: str, expected, provenance: str, computed, residual: float,
               passed: bool) -> dict:
    return {
        "name": name,
        "ref": ref,
        "expected": expected,
        "provenance": provenance,
        "computed": computed,
        "residual": float(residual),
        "pass": bool(passed),
    }


# --- Deligne Cocycles ---

@dataclass
class DeligneCocycle:
    """
    l-gerbe with connection: omega[nu] has bidegree (nu, l - nu); theta is a real lift of bidegree (l, 0)
    whose class mod Z is the meaningful datum.
    """
    cover: GoodCover
    level: int
    omega: list
    theta: CechCochain
    name: str = "cocycle"
    _curvature: ExteriorForm | None = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "level": self.level,
            "cover_id": self.cover.ident,
            "theta": [{"tuple": list(s), "value": str(v.terms.get((), 0))} for s, v in sorted(self.theta.values.items())],
            "omega": [w.to_json() for w in self.omega],
            "curvature": self._curvature.to_json() if self._curvature is not None else None,
        }


def trivial_deligne(cover: GoodCover, level: int, omega0: ExteriorForm | None = None) -> DeligneCocycle:
    """The topologically trivial class: omega^0 = eps* w, all higher components and theta zero."""
    first = epsilon_star(omega0, cover) if omega0 is not None else zero_cochain(cover, 0, level)
    omega = [first] + [zero_cochain(cover, nu, level - nu) for nu in range(1, level + 1)]
    return DeligneCocycle(cover, level, omega, zero_cochain(cover, level, 0), "trivial")


def _is_integer_value(value, tol: float) -> tuple:
    if isinstance(value, sp.Basic):
        value = value if value.is_Number else sp.simplify(value)
        if value.is_Integer:
            return True, 0.0
        if value.is_Rational:
            return False, abs(float(value) - round(float(value)))
    residual = abs(float(value) - round(float(value)))
    return residual <= tol, residual


def _locally_constant_integer(c: CechCochain, tol: float) -> tuple:
    """(passed, residual): c must have vanishing d and integer values on every tuple domain."""
    derivative = cochain_residual(c.d())
    worst = derivative["residual"]
    passed = derivative["exact_zero"] or worst <= tol
    for simplex in c.tuples():
        form = c.value(simplex)
        for point in _domain_points(c.cover, simplex, 1):
            value = form.evaluate(point).get((), 0)
            ok, residual = _is_integer_value(value, tol)
            passed = passed and ok
            worst = max(worst, residual)
    return passed, worst


def verify_deligne(dc: DeligneCocycle, tol: float = 1e-9) -> dict:
    """Residuals of every cocycle condition; failures are listed, never raised."""
    checks = []
    for nu in range(1, dc.level + 1):
        lhs = cech_delta(dc.omega[nu - 1])
        dw = dc.omega[nu].d()
        combined = lhs + (dw if nu % 2 == 0 else dw.scale(-1))
        result = cochain_residual(combined)
        checks.append(make_check(
            f"delta omega^{nu - 1} + (-1)^{nu} d omega^{nu} = 0", "cocycle-condition", 0, "TRIVIAL",
            "0" if result["exact_zero"] else f"{result['residual']:.3e}", result["residual"],
            result["exact_zero"] or result["residual"] <= tol,
        ))
    top = cech_delta(dc.omega[dc.level])
    passed, residual = _locally_constant_integer(top, tol)
    checks.append(make_check("delta omega^l is a locally constant integer", "cocycle-integrality", "Z", "TRIVIAL",
                             "integral" if passed else "non-integral", residual, passed))
    shift = dc.theta + dc.omega[dc.level]
    passed, residual = _locally_constant_integer(shift, tol)
    checks.append(make_check("theta + omega^l = 0 mod Z", "theta-lift", "Z", "TRIVIAL",
                             "integral" if passed else "non-integral", residual, passed))
    result = cochain_residual(cech_delta(dc.omega[0].d()))
    checks.append(make_check("delta d omega^0 = 0", "curvature-gluing", 0, "TRIVIAL",
                             "0" if result["exact_zero"] else f"{result['residual']:.3e}", result["residual"],
                             result["exact_zero"] or result["residual"] <= tol))
    dw = dc.omega[0].d()
    F = glue(dw)
    result = cochain_residual(dw - epsilon_star(F, dc.cover))
    glued = result["exact_zero"] or result["residual"] <= tol
    checks.append(make_check("eps* F = d omega^0", "curvature-extraction", 0, "TRIVIAL",
                             "0" if result["exact_zero"] else f"{result['residual']:.3e}", result["residual"], glued))
    report = {"name": dc.name, "level": dc.level, "checks": checks, "pass": all(c["pass"] for c in checks),
              "curvature": F.to_json() if glued else None}
    if glued and dc._curvature is None:
        dc._curvature = F
    if not report["pass"]:
        failed = [c["name"] for c in checks if not c["pass"]]
        logging.warning(f"Deligne cocycle '{dc.name}' fails: {failed}")
    return report


def glue(c: CechCochain) -> ExteriorForm:
    """sum_i phi_i c_i for a (0, q) cochain."""
    result = ExteriorForm.zero(c.cover.space, c.q)
    for (i,) in c.tuples():
        result = result + c.value((i,)).scale(c.cover.pou[i])
    return result


def curvature(dc: DeligneCocycle, tol: float = 1e-9) -> ExteriorForm:
    """The global (l+1)-form F with eps* F = d omega^0."""
    if dc._curvature is not None:
        return dc._curvature
    dw = dc.omega[0].d()
    candidate = glue(dw)
    mismatch = dw - epsilon_star(candidate, dc.cover)
    result = cochain_residual(mismatch)
    if not (result["exact_zero"] or result["residual"] <= tol):
        raise NotACocycleError(
            f"d omega^0 of '{dc.name}' does not glue to a global form (residual {result['residual']:.3e})."
        )
    dc._curvature = candidate
    return candidate


@dataclass
class IntegralCechCocycle:
    cover: GoodCover
    p: int
    values: dict

    def is_cocycle(self) -> bool:
        for simplex in self.cover.nerve.nondegenerate(self.p + 1):
            total = sum((-1) ** nu * self.values.get(face(simplex, nu), 0) for nu in range(self.p + 2))
            if total != 0:
                return False
        return True

    def pair(self, cycle: list) -> int:
        """Evaluation on a Cech chain [(sign, simplex), ...]."""
        return sum(sign * self.values.get(simplex, 0) for sign, simplex in cycle)

    def scale(self, factor: int) -> "IntegralCechCocycle":
        return IntegralCechCocycle(self.cover, self.p, {s: factor * v for s, v in self.values.items()})

    def to_json(self) -> dict:
        return {"level": self.p, "values": [{"tuple": list(s), "value": v} for s, v in sorted(self.values.items())]}


def integral_values(c: CechCochain, tol: float = 1e-9) -> dict:
    """Reads a (p, 0) cochain of locally constant integers as {tuple: int}."""
    values = {}
    for simplex in c.tuples():
        form = c.value(simplex)
        readings = set()
        for point in _domain_points(c.cover, simplex, 1):
            raw = form.evaluate(point).get((), 0)
            ok, residual = _is_integer_value(raw, tol)
            if not ok:
                raise IntegralityError(f"Value {raw} on {simplex} is not an integer (residual {residual:.3e}).")
            readings.add(int(round(float(raw))))
        if len(readings) > 1:
            raise IntegralityError(f"Value on {simplex} is not locally constant: {sorted(readings)}.")
        value = readings.pop() if readings else 0
        if value:
            values[simplex] = value
    return values


def bockstein_class(dc: DeligneCocycle, tol: float = 1e-9) -> IntegralCechCocycle:
    """z = -delta omega^l, an integral Cech (l+1)-cocycle."""
    z = IntegralCechCocycle(dc.cover, dc.level + 1, integral_values(cech_delta(dc.omega[dc.level]).scale(-1), tol))
    if not z.is_cocycle():
        raise NotACocycleError(f"The Bockstein class of '{dc.name}' is not a Cech cocycle.")
    return z


def apply_equivalence(dc: DeligneCocycle, witnesses: list) -> DeligneCocycle:
    """omega + D(eta) for a total-degree (l-1) witness eta = [eta^0, ..., eta^(l-1)]; theta moves by -delta eta^(l-1)."""
    eta = TotalCochain(dc.cover, dc.level - 1, witnesses)
    shift = total_differential(eta)
    omega = [dc.omega[nu] + shift.component(nu) for nu in range(dc.level + 1)]
    theta = dc.theta - shift.component(dc.level)
    return DeligneCocycle(dc.cover, dc.level, omega, theta, f"{dc.name}+D(eta)")


# --- Periods ---

@dataclass(frozen=True, eq=False)
class Cycle:
    """A parametrized closed submanifold: parameter space, map into the ambient coordinates, reference volume."""
    name: str
    params: CoordinateSpace
    mapping: dict
    reference: ExteriorForm

    def pull(self, a: ExteriorForm) -> ExteriorForm:
        mapping = {c: e for c, e in self.mapping.items() if c in a.space.coords}
        for coord in a.space.coords:
            if coord not in mapping and coord not in self.params.coords:
                mapping[coord] = sp.Rational(1, 3)
        return a.pullback(self.params, mapping)

    def integrate(self, a: ExteriorForm) -> sp.Expr:
        pulled = self.pull(a).integrate_fibre(self.params.coords)
        return pulled.terms[()].pieces[()] if () in pulled.terms else sp.Integer(0)

    @property
    def volume(self) -> sp.Expr:
        return self.reference.integrate_fibre(self.params.coords).terms[()].pieces[()]


def torus_cycles(space: CoordinateSpace, dimension: int) -> list:
    """Coordinate subtori of the periodic coordinates of `space`."""
    periodic = [c for c in space.coords if space.kind(c) != AFFINE and space.kind(c) != "barycentric"]
    cycles = []
    for coords in itertools.combinations(periodic, dimension):
        params = CoordinateSpace(f"T[{','.join(coords)}]", coords, tuple(space.kind(c) for c in coords),
                                 tuple(space.bound(c) for c in coords))
        reference = ExteriorForm.from_terms(params, [(1, list(coords))])
        cycles.append(Cycle(f"T[{','.join(coords)}]", params, {}, reference))
    return cycles


def sphere_parametrization(k: int) -> tuple:
    """
    Hyperspherical angles of S^{k-1}: (params, {z_j: expr}). Polar angles phi_i run over [0, pi],
    the last angle theta over [0, 2 pi]; k = 2 gives z1 = cos(theta), z2 = sin(theta).
    """
    polar = [f"phi{i}" for i in range(1, k - 1)]
    coords = tuple(polar + ["theta"])
    kinds = tuple([AFFINE] * len(polar) + [ANGULAR])
    bounds = tuple([(sp.Integer(0), sp.pi)] * len(polar) + [(sp.Integer(0), 2 * sp.pi)])
    params = CoordinateSpace(f"S{k - 1}", coords, kinds, bounds)
    angles = [coord_symbol(c) for c in polar]
    theta = coord_symbol("theta")
    mapping = {}
    prefix = sp.Integer(1)
    for j, angle in enumerate(angles):
        mapping[f"z{j + 1}"] = prefix * sp.cos(angle)
        prefix = prefix * sp.sin(angle)
    mapping[f"z{k - 1}"] = prefix * sp.cos(theta)
    mapping[f"z{k}"] = prefix * sp.sin(theta)
    return params, mapping


def sphere_volume_form(space: CoordinateSpace, coords) -> ExteriorForm:
    """sum_j (-1)^(j-1) z_j dz_1 ^ .. ^dz_j^ .. ^ dz_k on the ambient chart."""
    terms = []
    for j, coord in enumerate(coords):
        rest = [c for c in coords if c != coord]
        terms.append(((-1) ** j * coord_symbol(coord), rest))
    return ExteriorForm.from_terms(space, terms, degree=len(coords) - 1)


def sphere_cycle(k: int, ambient: CoordinateSpace, coords=None) -> Cycle:
    coords = tuple(coords or [f"z{j}" for j in range(1, k + 1)])
    params, mapping = sphere_parametrization(k)
    mapping = {coords[j]: mapping[f"z{j + 1}"] for j in range(k)}
    volume = sphere_volume_form(ambient, coords)
    sub_mapping = {c: e for c, e in mapping.items()}
    for coord in ambient.coords:
        if coord not in sub_mapping:
            sub_mapping[coord] = sp.Rational(1, 3)
    reference = volume.pullback(params, sub_mapping)
    return Cycle(f"S{k - 1}", params, mapping, reference)


def periods(a: ExteriorForm, cycles: list) -> list:
    """Normalized periods: integral over each cycle divided by the integral of its reference volume."""
    if not a.d().is_zero():
        raise NotClosedError(f"Periods need a closed form; d of the {a.degree}-form is nonzero.")
    values = []
    for cycle in cycles:
        if cycle.params.dimension != a.degree:
            raise PreconditionError(f"Cycle {cycle.name} has dimension {cycle.params.dimension}, "
                                    f"the form has degree {a.degree}.")
        ratio = sp.nsimplify(sp.simplify(cycle.integrate(a) / cycle.volume))
        values.append(ratio)
    return values


def sphere_period_expected(k: int) -> sp.Expr:
    """(-1)^C(k,2) (k-1)! for the fibre integral of B ^ (dB)^(k-1) on S^(k-1)."""
    return sp.Integer((-1) ** (k * (k - 1) // 2) * factorial(k - 1))

