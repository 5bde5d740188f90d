"""
Scenario registry, report assembly and backend comparison for the worked examples.
"""

import hashlib
import json
import logging
import platform
import re
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import sympy as sp
from thefuzz import process

from config import (
    DEFAULT_COVER_ARCS, DEFAULT_FIBRE_CONVENTION, DEFAULT_OVERLAP, DEFAULT_POU, DEFAULT_QUAD_ORDER,
    DEFAULT_TOLERANCE, NUMERIC_TOLERANCE, REPORT_SCHEMA_VERSION, SCENARIO_DIR, STOKES_TOLERANCE,
)
from .cech import (
    Cycle, TotalCochain, bockstein_class, curvature, make_check, periods, sphere_period_expected, torus_cycles,
    verify_deligne,
)
from .chern_weil import (
    InvariantMonomial, formal_holonomy, gv_form, holonomy, holonomy_homomorphism_check, line_bundle_deligne,
    poincare_curvature_only, product_identity_check, transgression,
)
from .errors import ConfigurationError, DeligneError
from .exterior import (
    ANGULAR, CoordinateSpace, ExteriorForm, affine_space, as_exact, coord_symbol, periodic_space, sample_points,
)
from .families import (
    FamilySpec, curvature_check, dilation_family, expected_genus_invariant, expected_torus_invariant,
    extension_independence, flat_class, foliated_family_scenario, functoriality, genus_family, gv_fibre_integral,
    lambda_family, negative_control_extensions, poincare_family, poincare_pairing, rigidity_family, rigidity_probe,
    sphere_restriction, torus_family,
)
from .fibre import check_integral_preserved, convention_verdict, fibre_integrate, stokes_residual
from .simplicial import from_global, gerbe_beta, whitney_lift

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

BACKEND_CHOICES = ("exact", "numeric", "formal", "all")


@dataclass
class ScenarioConfig:
    scenario: str
    backend: str = "exact"
    tolerance: float = DEFAULT_TOLERANCE
    quad_order: int = DEFAULT_QUAD_ORDER
    cover_arcs: int = DEFAULT_COVER_ARCS
    overlap: str = DEFAULT_OVERLAP
    pou: str = DEFAULT_POU
    convention: str = DEFAULT_FIBRE_CONVENTION
    report: str | None = None
    csv: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ConfigurationError(f"Tolerance must be positive, got {self.tolerance}.")
        if self.backend not in BACKEND_CHOICES:
            raise ConfigurationError(f"Unknown backend '{self.backend}'. Use one of {BACKEND_CHOICES}.")
        if self.quad_order < 1:
            raise ConfigurationError(f"Quadrature order must be positive, got {self.quad_order}.")

    def wants(self, backend: str) -> bool:
        return self.backend in (backend, "all")

    def hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k not in ("report", "csv")}
        return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


class ScenarioRun:
    """Collects checks, extra blocks, coefficient tables and stage timings of one scenario."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.checks = []
        self.extras = {}
        self.tables = {}
        self.timings = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 4)
            logging.info(f"[{self.cfg.scenario}] stage '{name}' took {self.timings[name]:.3f}s")

    def check(self, entry: dict):
        self.checks.append(entry)
        if not entry["pass"]:
            logging.warning(f"[{self.cfg.scenario}] check failed: {entry['name']} (computed {entry['computed']})")

    def expect_form(self, name: str, ref: str, computed: ExteriorForm, expected: ExteriorForm, provenance: str):
        ok = computed.equals(expected)
        self.check(make_check(name, ref, repr(expected), provenance, repr(computed), 0.0 if ok else 1.0, ok))
        self.tables[ref] = form_table(computed)

    def expect_value(self, name: str, ref: str, computed, expected, provenance: str, tol: float = 0.0):
        residual = abs(complex(sp.N(sp.sympify(computed) - sp.sympify(expected))))
        ok = sp.simplify(sp.sympify(computed) - sp.sympify(expected)) == 0 or residual <= tol
        self.check(make_check(name, ref, str(expected), provenance, str(computed), residual, ok))


def form_table(form: ExteriorForm) -> pd.DataFrame:
    """Coefficient table of a form: one row per wedge monomial and breakpoint cell."""
    rows = []
    for mono, coeff in sorted(form.terms.items()):
        pieces = getattr(coeff, "pieces", {(): coeff})
        for cell, expr in sorted(pieces.items()):
            rows.append({"monomial": "^".join(f"d{c}" for c in mono) or "1", "cell": str(list(cell)),
                         "coefficient": str(expr)})
    return pd.DataFrame(rows, columns=["monomial", "cell", "coefficient"])


# --- Scenarios ---

def _holonomy_checks(run: ScenarioRun, spec: FamilySpec):
    xs = spec.fibre_coords
    point = {f"z{j}": sp.Rational(j, 3) for j in range(1, len(xs) + 1)}
    lattice = [tuple(1 if i == j else 0 for i in range(len(xs))) for j in range(len(xs))]
    lattice.append(tuple(2 - i for i in range(len(xs))))
    run.check(holonomy_homomorphism_check(spec.connection, xs, lattice, point))
    vector = lattice[-1]
    expected = sp.exp(sum(v * point[f"z{j + 1}"] for j, v in enumerate(vector)))
    run.expect_value("holonomy exp(sum lambda_j z_j)", "holonomy", holonomy(spec.connection, xs, vector, point),
                     expected, "REFERENCE")


def _numeric_comparison(run: ScenarioRun, spec: FamilySpec, exact_form: ExteriorForm):
    cfg = run.cfg
    lifted = from_global(transgression(spec.Q, spec.connection), spec.fibration.product)
    pushed = fibre_integrate(lifted, spec.fibration, cfg.convention, "numeric", cfg.quad_order, max_level=1)
    numeric = pushed.value(0, (0,))
    exact = exact_form.embed(numeric.space)
    points = sample_points(numeric.space)
    delta = (numeric - exact).max_abs(points)
    run.check(make_check(f"numeric fibre integral (order {cfg.quad_order}) vs exact", "backend-numeric", 0,
                         "DERIVED", f"{delta:.3e}", delta, delta <= NUMERIC_TOLERANCE))
    run.extras["numeric_delta"] = delta


def scenario_ex7_1(run: ScenarioRun):
    cfg = run.cfg
    spec = torus_family(2, cfg.cover_arcs, cfg.overlap, cfg.pou)
    base = spec.base_space
    with run.stage("invariant"):
        inv = lambda_family(spec, "chart")
    z1, z2 = coord_symbol("z1"), coord_symbol("z2")
    run.expect_form("Lambda_Y/Z = z2 dz1 - z1 dz2", "ex7_1-invariant", inv.form,
                    ExteriorForm.from_terms(base, [(z2, ["z1"]), (-z1, ["z2"])]), "REFERENCE")
    run.expect_form("curvature = -2 dz1 ^ dz2", "ex7_1-curvature", inv.curvature(),
                    ExteriorForm.from_terms(base, [(-2, ["z1", "z2"])]), "REFERENCE")
    run.check(curvature_check(inv, spec))
    with run.stage("holonomy"):
        _holonomy_checks(run, spec)
    with run.stage("chart-shuffle"):
        shuffled = lambda_family(spec, "chart-shuffle", cfg.convention)
    run.expect_form("fibre integrator agrees with the classical integral", "ex7_1-shuffle", shuffled.form,
                    inv.form, "DERIVED")
    if cfg.wants("numeric"):
        with run.stage("numeric"):
            _numeric_comparison(run, spec, inv.form)
    if cfg.wants("formal"):
        with run.stage("formal"):
            formal = lambda_family(spec, "formal")
        run.expect_form("formal backend agrees with the chart backend", "ex7_1-formal", formal.form, inv.form,
                        "DERIVED")
    with run.stage("extension"):
        perturbed = spec.connection + ExteriorForm.from_terms(spec.space, [(z1 * z2, ["z1"])])
        independence = extension_independence(spec, spec.connection, perturbed)
        run.check(independence["check"])
        control_spec, B0, B1 = negative_control_extensions()
        control = extension_independence(control_spec, B0, B1)
        run.check(make_check("negative control: non-flat fibres change the invariant", "extension-control",
                             "not closed", "DERIVED", "closed" if control["closed"] else "not closed",
                             0.0 if not control["trivial"] else 1.0, not control["trivial"]))
    with run.stage("foliated"):
        points = sample_points(base)
        foliated = foliated_family_scenario(spec, points)
        run.check(make_check("invariant varies over the base", "foliated-variation", True, "REFERENCE",
                             foliated["varies"], 0.0 if foliated["varies"] else 1.0, foliated["varies"]))
    with run.stage("godbillon-vey"):
        gv, identity = gv_fibre_integral(spec.connection, 1, spec.fibre_coords)
        run.check(identity)
        run.expect_form("fibrewise Godbillon-Vey integral", "gv-fibre-integral", gv, inv.form, "DERIVED")


def scenario_ex7_1_s1(run: ScenarioRun):
    cfg = run.cfg
    spec = torus_family(2, cfg.cover_arcs, cfg.overlap, cfg.pou, covers=False)
    inv = lambda_family(spec, "chart")
    circle = sphere_restriction(2, spec.base_space)
    with run.stage("restriction"):
        restricted = circle.pull(inv.form)
    theta = ExteriorForm.from_terms(circle.params, [(-1, ["theta"])])
    run.expect_form("restriction to S1 is -d theta", "ex7_1_s1-form", restricted, theta, "REFERENCE")
    run.expect_value("period over S1", "ex7_1_s1-period", flat_class(inv.form, [circle])[0], -1, "REFERENCE")


def _subtorus_cycle(g: int, pair: int, swapped: bool = False) -> Cycle:
    """Circle z_{2i-1} = cos(theta_i), z_{2i} = sin(theta_i) inside the base of the genus-g family."""
    name = f"theta{pair}"
    params = CoordinateSpace(f"S1[{name}]", (name,), (ANGULAR,), ((sp.Integer(0), 2 * sp.pi),))
    angle = coord_symbol(name)
    first, second = (sp.sin(angle), sp.cos(angle)) if swapped else (sp.cos(angle), sp.sin(angle))
    mapping = {f"z{2 * pair - 1}": first, f"z{2 * pair}": second}
    for j in range(1, 2 * g + 1):
        mapping.setdefault(f"z{j}", sp.Integer(0))
    reference = ExteriorForm.from_terms(params, [(1, [name])])
    return Cycle(name + ("'" if swapped else ""), params, mapping, reference)


def scenario_ex7_5(run: ScenarioRun):
    g = int(run.cfg.params.get("g", 2))
    spec = genus_family(g)
    base = spec.base_space
    structure = spec.formal.model.check()
    run.check(make_check("fibre cohomology is graded commutative and associative", "formal-model", True,
                         "TRIVIAL", structure, 0.0 if all(structure.values()) else 1.0, all(structure.values())))
    with run.stage("invariant"):
        inv = lambda_family(spec, "formal")
    run.expect_form(f"genus-{g} invariant", "ex7_5-invariant", inv.form, expected_genus_invariant(g, base), "REFERENCE")
    volume = ExteriorForm.from_terms(base, [(-2, [f"z{2 * i - 1}", f"z{2 * i}"]) for i in range(1, g + 1)])
    run.expect_form("curvature -2 sum dz_{2i-1} ^ dz_{2i}", "ex7_5-curvature", inv.curvature(), volume, "REFERENCE")
    run.check(curvature_check(inv, spec))
    with run.stage("subtori"):
        cycles = [_subtorus_cycle(g, i) for i in range(1, g + 1)]
        values = flat_class(inv.form, cycles)
        for cycle, value in zip(cycles, values):
            run.expect_value(f"period over {cycle.name}", "ex7_5-period", value, -1, "DERIVED")
        swapped = flat_class(inv.form, [_subtorus_cycle(g, 1, swapped=True)])[0]
        run.expect_value("swapping the embedding flips the period", "ex7_5-antisymmetry", swapped, 1, "DERIVED")
    point = {f"z{j}": sp.Rational(j, 5) for j in range(1, 2 * g + 1)}
    loop_a, loop_b = {"a1": 1}, {"b1": 1, "a1": 1}
    combined = {"a1": 2, "b1": 1}
    lhs = formal_holonomy(spec.formal, combined, point)
    rhs = formal_holonomy(spec.formal, loop_a, point) * formal_holonomy(spec.formal, loop_b, point)
    run.expect_value("formal holonomy is a homomorphism", "ex7_5-holonomy", lhs, rhs, "TRIVIAL")


def scenario_ex7_8(run: ScenarioRun):
    cfg = run.cfg
    k = int(cfg.params.get("k", 3))
    spec = torus_family(k, cfg.cover_arcs, cfg.overlap, cfg.pou, covers=(k == 2))
    base = spec.base_space
    with run.stage("invariant"):
        inv = lambda_family(spec, "chart")
    run.expect_form(f"T^{k} invariant (-1)^C(k,2) (k-1)! sum", "ex7_8-invariant", inv.form,
                    expected_torus_invariant(k, base), "REFERENCE")
    zs = [f"z{j}" for j in range(1, k + 1)]
    coefficient = (-1) ** (k * (k - 1) // 2) * sp.factorial(k)
    run.expect_form("curvature (-1)^C(k,2) k! V", "ex7_8-curvature", inv.curvature(),
                    ExteriorForm.from_terms(base, [(coefficient, zs)]), "REFERENCE")
    run.check(curvature_check(inv, spec))
    with run.stage("sphere"):
        sphere = sphere_restriction(k, base)
        run.expect_value(f"period over S^{k - 1}", "ex7_8-sphere", flat_class(inv.form, [sphere])[0],
                         sphere_period_expected(k), "DERIVED")
    with run.stage("formal"):
        formal = lambda_family(spec, "formal")
    run.expect_form("formal backend agrees with the chart backend", "ex7_8-formal", formal.form, inv.form, "DERIVED")
    if k >= 2:
        run.check(product_identity_check(InvariantMonomial(1), InvariantMonomial(k - 1), spec.connection))
    if k == 2:
        with run.stage("chart-shuffle"):
            shuffled = lambda_family(spec, "chart-shuffle", cfg.convention)
        run.expect_form("fibre integrator agrees with the classical integral", "ex7_8-shuffle", shuffled.form,
                        inv.form, "DERIVED")
        if cfg.wants("numeric"):
            with run.stage("numeric"):
                _numeric_comparison(run, spec, inv.form)
    with run.stage("rigidity"):
        parameters = [sp.Rational(j, 4) for j in range(5)]
        point = {"z1": sp.Rational(1, 3), "z2": sp.Rational(-1, 5), "z3": sp.Rational(2, 7)}
        result = rigidity_probe(rigidity_family, parameters, point)
        run.check(result["check"])
        circle = sphere_restriction(2, dilation_family(0).base_space)
        control = rigidity_probe(dilation_family, parameters, point, [circle])
        run.check(make_check("deformation with n - l = 0 moves the circle period", "rigidity-control", "varies",
                             "DERIVED", "constant" if control["constant"] else "varies",
                             0.0 if not control["constant"] else 1.0, not control["constant"]))
        run.extras["rigidity"] = {"rigid": result, "control": control}


def scenario_ex7_15(run: ScenarioRun):
    cfg = run.cfg
    tol = cfg.tolerance
    spec = poincare_family(cfg.cover_arcs, cfg.cover_arcs, cfg.overlap, cfg.pou)
    lb = spec.line_bundle
    for entry in lb.check(tol)["checks"]:
        run.check(entry)
    with run.stage("cocycle"):
        dc = line_bundle_deligne(lb, tol)
        for entry in verify_deligne(dc, tol)["checks"]:
            run.check(entry)
    F = curvature(dc)
    run.expect_form("Poincare curvature d xi ^ dx", "ex7_15-curvature", F,
                    ExteriorForm.from_terms(F.space, [(1, ["xi", "x"])]), "REFERENCE")
    pairing = bockstein_class(dc, tol).pair(dc.cover.fundamental_cycle())
    period = periods(F, torus_cycles(F.space, 2))[0]
    run.expect_value("Bockstein pairing equals the curvature period", "ex7_15-c1", pairing, period, "DERIVED")
    with run.stage("pushforward"):
        inv = lambda_family(spec, "chart-shuffle", cfg.convention)
    for entry in verify_deligne(inv.cocycle, tol)["checks"]:
        run.check(entry)
    pushed_curvature = inv.curvature()
    run.expect_form("pushforward curvature d xi", "ex7_15-pushed-curvature", pushed_curvature,
                    ExteriorForm.from_terms(pushed_curvature.space, [(1, ["xi"])]), "DERIVED")
    run.check(curvature_check(inv, spec))
    pushed_pairing = poincare_pairing(inv)
    pushed_period = periods(pushed_curvature, torus_cycles(pushed_curvature.space, 1))[0]
    run.expect_value("|Bockstein pairing| of the pushforward", "ex7_15-pairing", abs(pushed_pairing), 1, "DERIVED")
    run.expect_value("pushforward pairing equals its curvature period", "ex7_15-sign", pushed_pairing,
                     pushed_period, "DERIVED")
    run.extras["bockstein_sign"] = {
        "pairing": int(pushed_pairing),
        "curvature_period": str(pushed_period),
        "sign": 1 if pushed_pairing * pushed_period > 0 else -1,
    }
    with run.stage("validation"):
        lam = whitney_lift(TotalCochain(dc.cover, dc.level, list(dc.omega)))
        run.check(stokes_residual(lam, spec.fibration, cfg.convention, tol=STOKES_TOLERANCE))
        broken = stokes_residual(lam, spec.fibration, cfg.convention, sign=1, tol=STOKES_TOLERANCE)
        run.check(make_check("negative control: wrong Stokes sign is detected", "stokes-control", "fail",
                             "TRIVIAL", "fail" if not broken["pass"] else "pass", 0.0 if not broken["pass"] else 1.0,
                             not broken["pass"]))
        beta = gerbe_beta(lam, F)
        run.check(check_integral_preserved(beta, spec.fibration, cfg.convention, tol))
        verdict = convention_verdict(F, spec.fibration, tol)
        run.extras["fibre_convention"] = {
            "chosen": verdict["chosen"],
            "conventions": {c: {k: v for k, v in r.items()} for c, r in verdict["conventions"].items()},
        }
        run.check(make_check("configured fibre convention passes the oracle", "fibre-convention", cfg.convention,
                             "DERIVED", verdict["chosen"], 0.0, verdict["conventions"][cfg.convention]["pass"]))
    with run.stage("tensor-square"):
        square = lambda_family(poincare_family(cfg.cover_arcs, cfg.cover_arcs, cfg.overlap, cfg.pou, power=2),
                               "chart-shuffle", cfg.convention)
        run.expect_value("tensor square doubles the pairing", "ex7_15-linearity", poincare_pairing(square),
                         2 * pushed_pairing, "DERIVED")
    with run.stage("partition-independence"):
        other_pou = "pl" if cfg.pou != "pl" else "c1cubic"
        other = lambda_family(poincare_family(cfg.cover_arcs, cfg.cover_arcs, cfg.overlap, other_pou),
                              "chart-shuffle", cfg.convention)
        run.expect_form(f"curvature unchanged with the '{other_pou}' partition", "ex7_15-pou-curvature",
                        other.curvature(), pushed_curvature, "DERIVED")
        run.expect_value(f"pairing unchanged with the '{other_pou}' partition", "ex7_15-pou-pairing",
                         poincare_pairing(other), pushed_pairing, "DERIVED")


def scenario_ex7_15_curvature(run: ScenarioRun):
    k = int(run.cfg.params.get("k", 2))
    with run.stage("curvature"):
        result = poincare_curvature_only(k)
    run.expect_form(f"int_T{k} F^{k} = (-1)^(k(k+1)/2) k! d xi", "ex7_15-curvature-only", result["form"],
                    result["expected"], "DERIVED")
    degree = int(run.cfg.params.get("d", 2))
    with run.stage("functoriality"):
        scaled = functoriality(result["form"], [f"xi{j}" for j in range(1, k + 1)], degree)
    run.check(scaled["check"])


def scenario_gv_formal(run: ScenarioRun):
    spec = torus_family(2, covers=False)
    beta = spec.connection
    for n in range(3):
        _, report = gv_form(beta, n)
        run.check(report)
    with run.stage("fibre-integral"):
        gv, _ = gv_fibre_integral(beta, 1, spec.fibre_coords)
        chart = lambda_family(spec, "chart")
        formal = lambda_family(spec, "formal")
    run.expect_form("Godbillon-Vey fibre integral reproduces the family invariant", "gv-chart", gv, chart.form,
                    "DERIVED")
    run.expect_form("formal backend reproduces it", "gv-formal", formal.form, gv, "DERIVED")


def family_from_json(data: dict) -> FamilySpec:
    """{fibre: {coords}, base: {coords, bounds}, connection: [{coeff, wedge}], Q: {power, coeff}}."""
    try:
        fibre = periodic_space("X", data["fibre"]["coords"])
        base = affine_space("Z", data["base"]["coords"], data["base"].get("bounds"))
        space = fibre.product(base)
        terms = [(as_exact(t["coeff"]), t["wedge"]) for t in data["connection"]]
        B = ExteriorForm.from_terms(space, terms, degree=1)
        Q = InvariantMonomial(int(data["Q"]["power"]), data["Q"].get("coeff", 1))
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"Custom family is missing or malformed field: {e}")
    return FamilySpec(data.get("name", "custom"), space, tuple(fibre.coords), Q, B,
                      fibre_condition=data.get("fibre_condition", "flat"))


def scenario_custom(run: ScenarioRun):
    data = run.cfg.params["data"]
    spec = family_from_json(data)
    with run.stage("invariant"):
        inv = lambda_family(spec, "chart")
    run.tables["custom-invariant"] = form_table(inv.form)
    run.extras["invariant"] = repr(inv.form)
    run.check(curvature_check(inv, spec))
    if "expected" in data:
        expected = ExteriorForm.from_terms(spec.base_space, [(as_exact(t["coeff"]), t["wedge"])
                                                             for t in data["expected"]], degree=inv.form.degree)
        run.expect_form("custom expected invariant", "custom-invariant", inv.form, expected, "DERIVED")


SCENARIOS = {
    "ex7_1": (scenario_ex7_1, "T^2 family over R^2: invariant, curvature, holonomy, extension independence"),
    "ex7_1_s1": (scenario_ex7_1_s1, "restriction of the T^2 family invariant to the unit circle"),
    "ex7_5": (scenario_ex7_5, "genus-g surface family through the formal backend (param g)"),
    "ex7_8": (scenario_ex7_8, "T^k family over R^k (param k)"),
    "ex7_15": (scenario_ex7_15, "Poincare bundle pushforward to the dual circle"),
    "ex7_15_curvature": (scenario_ex7_15_curvature, "curvature-only Poincare computation on T^k (param k)"),
    "gv_formal": (scenario_gv_formal, "Godbillon-Vey forms and their fibre integrals"),
    "custom": (scenario_custom, "family loaded from a JSON file"),
}


# --- Resolution ---

def parse_scenario_id(text: str) -> tuple:
    """'ex7_8(k=3)' or 'ex7_8(3)' -> ('ex7_8', {'k': 3}); a .json path -> ('custom', {'data': ...})."""
    if text.endswith(".json"):
        path = Path(text)
        if not path.exists() and (SCENARIO_DIR / path.name).exists():
            path = SCENARIO_DIR / path.name
        if not path.exists():
            raise ConfigurationError(f"Scenario file '{text}' does not exist.")
        with open(path) as handle:
            data = json.load(handle)
        if "scenario" in data:
            return data["scenario"], dict(data.get("params", {}))
        return "custom", {"data": data}
    match = re.fullmatch(r"([A-Za-z0-9_]+)(?:\((.*)\))?", text.strip())
    if not match:
        raise ConfigurationError(f"Cannot parse scenario id '{text}'.")
    name, args = match.group(1), match.group(2)
    params = {}
    if args:
        defaults = {"ex7_5": "g", "ex7_8": "k", "ex7_15": "k", "ex7_15_curvature": "k"}
        for part in args.split(","):
            key, _, value = part.partition("=")
            if not value:
                key, value = defaults.get(name, "k"), key
            params[key.strip()] = int(value)
    return name, params


def resolve_scenario(name: str):
    if name in SCENARIOS:
        return SCENARIOS[name][0]
    best_match = process.extractOne(name, list(SCENARIOS))
    hint = f" Did you mean '{best_match[0]}'?" if best_match and best_match[1] >= 75 else ""
    raise ConfigurationError(f"Unknown scenario '{name}'.{hint} Available: {', '.join(SCENARIOS)}.")


def environment(cfg: ScenarioConfig) -> dict:
    return {
        "python": platform.python_version(),
        "sympy": sp.__version__,
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "config_hash": cfg.hash(),
    }


def _assemble(cfg: ScenarioConfig, run: ScenarioRun, error: str | None = None) -> dict:
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "backend": cfg.backend,
        "environment": environment(cfg),
        "checks": run.checks,
        "timings": run.timings,
        "pass": error is None and bool(run.checks) and all(c["pass"] for c in run.checks),
    }
    report.update(run.extras)
    if error is not None:
        report["error"] = error
    return report


def run_scenario(cfg: ScenarioConfig) -> dict:
    """
    Runs one scenario and returns its report. Unknown scenarios raise ConfigurationError
    before anything is computed; failures inside a scenario end up in the report.
    """
    name, params = parse_scenario_id(cfg.scenario)
    builder = resolve_scenario(name)
    cfg.params = {**params, **cfg.params}
    run = ScenarioRun(cfg)
    logging.info(f"--- Running scenario '{cfg.scenario}' (backend {cfg.backend}) ---")
    try:
        with run.stage("total"):
            builder(run)
        report = _assemble(cfg, run)
    except DeligneError as e:
        logging.error(f"Scenario '{cfg.scenario}' stopped: {e}", exc_info=True)
        report = _assemble(cfg, run, f"{type(e).__name__}: {e}")
    except Exception as e:
        logging.error(f"An unexpected error occurred in scenario '{cfg.scenario}': {e}", exc_info=True)
        report = _assemble(cfg, run, "An unexpected internal error occurred; see the log for the traceback.")
    write_outputs(report, run.tables, cfg)
    logging.info(f"--- Scenario '{cfg.scenario}' {'passed' if report['pass'] else 'FAILED'} ---")
    return report


def compare_backends(cfg: ScenarioConfig) -> dict:
    """Curvature and period deltas between the formal, chart-exact and chart-numeric paths."""
    name, params = parse_scenario_id(cfg.scenario)
    resolve_scenario(name)
    cfg.params = {**params, **cfg.params}
    run = ScenarioRun(cfg)
    try:
        if name in ("ex7_1", "ex7_8"):
            k = 2 if name == "ex7_1" else int(cfg.params.get("k", 2))
            spec = torus_family(k, cfg.cover_arcs, cfg.overlap, cfg.pou, covers=(k == 2))
            with run.stage("chart"):
                chart = lambda_family(spec, "chart")
            with run.stage("formal"):
                formal = lambda_family(spec, "formal")
            run.expect_form("formal vs chart", "compare-formal", formal.form, chart.form, "DERIVED")
            if k == 2:
                with run.stage("chart-shuffle"):
                    shuffled = lambda_family(spec, "chart-shuffle", cfg.convention)
                run.expect_form("chart-shuffle vs chart", "compare-shuffle", shuffled.form, chart.form, "DERIVED")
                with run.stage("numeric"):
                    _numeric_comparison(run, spec, chart.form)
        elif name == "ex7_15":
            results = {}
            for pou in ("c1cubic", "pl"):
                with run.stage(f"pushforward-{pou}"):
                    results[pou] = lambda_family(
                        poincare_family(cfg.cover_arcs, cfg.cover_arcs, cfg.overlap, pou), "chart-shuffle",
                        cfg.convention)
            run.expect_form("curvature independent of the partition of unity", "compare-pou-curvature",
                            results["pl"].curvature(), results["c1cubic"].curvature(), "DERIVED")
            run.expect_value("Bockstein pairing independent of the partition of unity", "compare-pou-pairing",
                             poincare_pairing(results["pl"]), poincare_pairing(results["c1cubic"]), "DERIVED")
        else:
            raise ConfigurationError(f"Scenario '{name}' does not run on two backends; use ex7_1, ex7_8 or ex7_15.")
        report = _assemble(cfg, run)
    except ConfigurationError:
        raise
    except Exception as e:
        logging.error(f"An unexpected error occurred comparing backends for '{cfg.scenario}': {e}", exc_info=True)
        report = _assemble(cfg, run, f"{type(e).__name__}: {e}")
    report["comparison"] = True
    write_outputs(report, run.tables, cfg)
    return report


# --- Output ---

def write_outputs(report: dict, tables: dict, cfg: ScenarioConfig):
    if cfg.report:
        path = Path(cfg.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as handle:
            json.dump(report, handle, indent=2, sort_keys=True, default=str)
        logging.info(f"Report written to {path}")
    if cfg.csv:
        directory = Path(cfg.csv)
        directory.mkdir(parents=True, exist_ok=True)
        for name, table in tables.items():
            table.to_csv(directory / f"{name}.csv", index=False)
        logging.info(f"Wrote {len(tables)} coefficient tables to {directory}")
