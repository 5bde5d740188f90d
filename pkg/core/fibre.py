"""
Integration along the fibre of simplicial forms for product fibrations Y = X x Z -> Z.

For a base tuple (i_0..i_p) and a cell of the fibre partition of unity with active
bumps j_0 < .. < j_q, the integrand on Delta^p x X is a pullback of the form's values
on product tuples ((i_mu, j_nu)). Three ways of assembling it are available:

  join            one pullback along t_mu * phi_j onto the tuple of all pairs (default)
  shuffle         one pullback per (q, p)-shuffle along the sigma coordinates, unsigned
  signed-shuffle  the same with the sign of each shuffle
"""

import logging
from dataclasses import dataclass

import sympy as sp

from .cech import TotalCochain, make_check
from .covers import GoodCover, product_cover, reduce_simplex, shuffle_paths
from .errors import NormalityRequiredError, PreconditionError
from .exterior import ExteriorForm, barycentric_coordinates, integrate_periodic
from .simplicial import (
    SimplicialForm, extract_gerbe, from_global, is_integral, level_space, verify_normal, verify_simplicial,
    whitney_lift,
)

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

CONVENTIONS = ("join", "shuffle", "signed-shuffle")


# --- Shuffles ---

@dataclass(frozen=True)
class Shuffle:
    n: int
    nu: tuple
    mu: tuple
    sign: int = 1

    def __post_init__(self):
        if self.mu[0] != 0 or self.nu[0] != 0 or len(self.mu) != self.n + 1 or len(self.nu) != self.n + 1:
            raise ValueError(f"Shuffle must start at (0, 0) and have {self.n + 1} vertices.")
        for r in range(1, self.n + 1):
            if self.mu[r] - self.mu[r - 1] + self.nu[r] - self.nu[r - 1] != 1:
                raise ValueError(f"Shuffle step {r} does not move exactly one index: {self.mu}, {self.nu}")
            if self.mu[r] < self.mu[r - 1] or self.nu[r] < self.nu[r - 1]:
                raise ValueError("Shuffle indices must be non-decreasing.")

    @property
    def p(self) -> int:
        return self.mu[-1]

    @property
    def q(self) -> int:
        return self.nu[-1]


def enumerate_shuffles(q: int, p: int) -> list:
    """All (q, p)-shuffles in a fixed order; there are binomial(p + q, p) of them."""
    shuffles = []
    for sign, path in shuffle_paths(p, q):
        shuffles.append(Shuffle(p + q, tuple(v[1] for v in path), tuple(v[0] for v in path), sign))
    return shuffles


def _sum_is_one(values) -> bool:
    total = sum(values, sp.Integer(0))
    if isinstance(total, sp.Basic):
        return sp.simplify(total - 1) == 0
    return abs(float(total) - 1.0) <= 1e-12


def sigma_coords(shuffle: Shuffle, t, phi) -> list:
    """
    sigma_r = sum of t_mu' * phi_nu' over the pairs (mu', nu') in the half-open lexicographic
    interval ((mu(r-1), nu(r-1)), (mu(r), nu(r))], base index first; sigma_0 = t_0 * phi_0.
    """
    if len(t) != shuffle.p + 1 or len(phi) != shuffle.q + 1:
        raise PreconditionError(f"Need {shuffle.p + 1} simplex and {shuffle.q + 1} bump values.")
    if not _sum_is_one(phi):
        raise PreconditionError("The bump functions passed to sigma_coords do not sum to 1.")
    width = shuffle.q + 1

    def index(mu, nu):
        return mu * width + nu

    pairs = [t[mu] * phi[nu] for mu in range(shuffle.p + 1) for nu in range(width)]
    sigma = [pairs[0]]
    for r in range(1, shuffle.n + 1):
        lo = index(shuffle.mu[r - 1], shuffle.nu[r - 1])
        hi = index(shuffle.mu[r], shuffle.nu[r])
        sigma.append(sum(pairs[lo + 1:hi + 1], sp.Integer(0)))
    return sigma


# --- Product fibrations ---

@dataclass(eq=False)
class ProductFibration:
    base: GoodCover
    fibre: GoodCover
    product: GoodCover

    @property
    def fibre_dimension(self) -> int:
        return self.fibre.space.dimension

    def position(self, base_position: int, fibre_position: int) -> int:
        return base_position * self.fibre.size + fibre_position


def product_fibration(base: GoodCover, fibre: GoodCover) -> ProductFibration:
    return ProductFibration(base, fibre, product_cover(base, fibre))


def _collapse_map(p: int, kept: list) -> dict:
    """Delta^p -> Delta^p' merging the vertices of each run of repeated indices."""
    t = barycentric_coordinates(p)
    bounds = kept + [p + 1]
    return {f"t{m}": sp.expand(sum(t[bounds[m]:bounds[m + 1]], sp.Integer(0))) for m in range(1, len(kept))}


def _cell_terms(fibration: ProductFibration, convention: str, simplex: tuple, active: list, phis: list, t: list):
    """[(sign, product tuple, substitution for its simplex coordinates)] for one fibre cell."""
    p = len(simplex) - 1
    q = len(active) - 1
    if convention == "join":
        target = tuple(fibration.position(i, j) for i in simplex for j in active)
        u = [t[mu] * phi for mu in range(p + 1) for phi in phis]
        return [(1, target, {f"t{k}": sp.expand(u[k]) for k in range(1, len(u))})]
    terms = []
    for shuffle in enumerate_shuffles(q, p):
        target = tuple(fibration.position(simplex[m], active[n]) for m, n in zip(shuffle.mu, shuffle.nu))
        sigma = sigma_coords(shuffle, t, phis)
        sign = shuffle.sign if convention == "signed-shuffle" else 1
        terms.append((sign, target, {f"t{r}": sp.expand(sigma[r]) for r in range(1, len(sigma))}))
    return terms


def _require_normal(omega: SimplicialForm) -> None:
    if omega.normal is None:
        logging.info(f"Checking degeneracy compatibility of '{omega.name}' before fibre integration")
        verify_normal(omega)
    if not omega.normal:
        raise NormalityRequiredError(f"Fibre integration needs a normal simplicial form; '{omega.name}' is not.")


def phi_tilde_pullback(omega: SimplicialForm, fibration: ProductFibration, p: int, simplex: tuple,
                       convention: str = "join") -> list:
    """The integrand on Delta^p x X x U_I, as [(fibre cell box, form)] over the cells of the fibre partition of unity."""
    _require_normal(omega)
    if convention not in CONVENTIONS:
        raise PreconditionError(f"Unknown fibre-integration convention '{convention}'. Use one of {CONVENTIONS}.")
    target_space = level_space(p, fibration.product.space)
    t = barycentric_coordinates(p)
    pieces = []
    for box, active_map in fibration.fibre.pou_cells():
        active = sorted(active_map)
        phis = [active_map[j] for j in active]
        cell = ExteriorForm.zero(target_space, omega.degree)
        for sign, target, mapping in _cell_terms(fibration, convention, simplex, active, phis, t):
            pulled = omega.value(len(target) - 1, target).pullback(target_space, mapping)
            cell = cell + (pulled if sign > 0 else -pulled)
        pieces.append((box, cell))
    return pieces


def fibre_integrate(omega: SimplicialForm, fibration: ProductFibration, convention: str = "join",
                    backend: str = "exact", order: int = 8, max_level: int | None = None) -> SimplicialForm:
    """Simplicial form of degree deg(omega) - dim X on the base cover; the result need not be normal."""
    _require_normal(omega)
    fibre_coords = fibration.fibre.space.coords
    degree = omega.degree - fibration.fibre_dimension

    def nondegenerate_value(p: int, simplex: tuple) -> ExteriorForm:
        total = ExteriorForm.zero(level_space(p, fibration.base.space), degree)
        for box, form in phi_tilde_pullback(omega, fibration, p, simplex, convention):
            if backend == "numeric":
                form = form.to_numeric(order)
            total = total + form.integrate_fibre(fibre_coords, bounds=box)
        return total

    def evaluate(p: int, simplex: tuple) -> ExteriorForm:
        reduced, kept = reduce_simplex(simplex)
        if len(reduced) == len(simplex):
            return nondegenerate_value(p, simplex)
        value = result.value(len(reduced) - 1, reduced)
        return value.pullback(level_space(p, fibration.base.space), _collapse_map(p, kept))

    result = SimplicialForm(fibration.base, degree, evaluate, max_level, f"int_X({omega.name})", normal=None)
    return result


def classical_fibre_integral(a: ExteriorForm, fibre_coords, bounds: dict | None = None) -> ExteriorForm:
    """Ordinary integration over the fibre coordinates, differentials moved to the left first."""
    if bounds is None and all(a.space.kind(c) in ("periodic", "angular") for c in fibre_coords):
        return integrate_periodic(a, fibre_coords)
    return a.integrate_fibre(fibre_coords, bounds)


# --- Validation ---

def _compare_levels(lhs: SimplicialForm, rhs: SimplicialForm, levels) -> tuple:
    exact_all, worst = True, 0.0
    for p in levels:
        for simplex in lhs.cover.nerve.nondegenerate(p):
            diff = lhs.value(p, simplex) - rhs.value(p, simplex)
            domain = lhs.cover.intersection(simplex)
            if diff.is_numeric() or not diff.is_zero_on(domain.as_dict()):
                exact_all = False
            points = []
            for component in domain.components():
                points.extend(component.sample_points(diff.space, 2))
            worst = max(worst, diff.max_abs(points))
    return exact_all, worst


def stokes_residual(omega: SimplicialForm, fibration: ProductFibration, convention: str = "join",
                    backend: str = "exact", order: int = 8, sign: int | None = None, levels=None,
                    tol: float = 1e-8) -> dict:
    """int_X d(omega) - (-1)^m d int_X(omega) on the base levels; `sign` overrides (-1)^m."""
    m = fibration.fibre_dimension
    sign = (-1) ** m if sign is None else sign
    levels = range(min(fibration.base.nerve.dimension, 1) + 1) if levels is None else levels
    lhs = fibre_integrate(omega.d(), fibration, convention, backend, order)
    rhs_exact = fibre_integrate(omega, fibration, convention, "exact", order).d().scale(sign)
    rhs = rhs_exact.to_numeric(order) if backend == "numeric" else rhs_exact
    exact_zero, worst = _compare_levels(lhs, rhs, levels)
    passed = exact_zero or worst <= tol
    return make_check("Stokes: int d w = (-1)^m d int w", "fibre-stokes", 0, "TRIVIAL",
                      "0" if exact_zero else f"{worst:.3e}", worst, passed)


def check_integral_preserved(omega: SimplicialForm, fibration: ProductFibration, convention: str = "join",
                             tol: float = 1e-9) -> dict:
    """I_Delta of the fibre integral of an integral form has integer entries."""
    pushed = fibre_integrate(omega, fibration, convention)
    flag, residual = is_integral(pushed, tol, max_level=pushed.degree)
    return make_check("fibre integral of an integral form is integral", "fibre-integrality", True, "DERIVED",
                      flag, residual, flag)


def convention_verdict(a: ExteriorForm, fibration: ProductFibration, tol: float = 1e-9) -> dict:
    """
    Runs each convention on eps*(a) for a global form a on Y and compares with eps* of the classical
    fibre integral and with face compatibility. The chosen convention is the first that passes both.
    """
    lifted = from_global(a, fibration.product)
    oracle = classical_fibre_integral(a, fibration.fibre.space.coords)
    expected = from_global(oracle, fibration.base)
    top = min(fibration.base.nerve.dimension, 1)
    verdict = {}
    for convention in CONVENTIONS:
        pushed = fibre_integrate(lifted, fibration, convention, max_level=top)
        face = verify_simplicial(pushed, tol, max_level=top)["pass"]
        exact_zero, worst = _compare_levels(pushed, expected, range(top + 1))
        oracle_ok = exact_zero or worst <= tol
        verdict[convention] = {"face_compatible": face, "matches_oracle": oracle_ok, "residual": worst,
                               "pass": face and oracle_ok}
        if not (face and oracle_ok):
            logging.warning(f"Fibre-integration convention '{convention}' rejected (residual {worst:.3e}).")
    chosen = next((c for c in CONVENTIONS if verdict[c]["pass"]), None)
    return {"conventions": verdict, "chosen": chosen}


def deligne_pushforward(dc, fibration: ProductFibration, convention: str = "join", tol: float = 1e-9):
    """Whitney lift, fibre integration, extraction: a level-(l - m) cocycle on the base cover."""
    m = fibration.fibre_dimension
    if dc.cover is not fibration.product:
        raise PreconditionError("The cocycle must live on the product cover of the fibration.")
    if dc.level < m:
        raise PreconditionError(f"Level {dc.level} is below the fibre dimension {m}.")
    lam = whitney_lift(TotalCochain(dc.cover, dc.level, list(dc.omega)))
    pushed = fibre_integrate(lam, fibration, convention, max_level=dc.level - m + 1)
    logging.info(f"Pushing '{dc.name}' forward along a {m}-dimensional fibre with the '{convention}' convention.")
    return extract_gerbe(pushed, tol, name=f"int_X({dc.name})")
