"""
Manifold models, good covers, nerve combinatorics and exact partitions of unity.

A cover is a product of one-dimensional factor covers (circle arcs, interval
charts or a single chart). Elements are addressed by their position in the
lexicographic order of the factor labels, first factor slowest.
"""

import itertools
import logging
import threading
from dataclasses import dataclass, field
from functools import cached_property

import sympy as sp

from .errors import BadCoverError, NerveIndexError, PreconditionError
from .exterior import CoeffExpr, CoordinateSpace, affine_space, as_exact, coord_symbol, periodic_space

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

POU_KINDS = ("c1cubic", "pl")


# --- Domains ---

def _intersect_intervals(a, b) -> tuple:
    result = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo < hi:
                result.append((lo, hi))
    return tuple(sorted(result))


@dataclass(frozen=True)
class Domain:
    """Open set given per coordinate as a union of open rational intervals; absent coordinates are unconstrained."""
    intervals: tuple = ()

    @classmethod
    def of(cls, mapping: dict) -> "Domain":
        return cls(tuple(sorted((coord, tuple(sorted(ivs))) for coord, ivs in mapping.items())))

    def as_dict(self) -> dict:
        return dict(self.intervals)

    def intersect(self, other: "Domain") -> "Domain":
        merged = self.as_dict()
        for coord, ivs in other.intervals:
            merged[coord] = _intersect_intervals(merged[coord], ivs) if coord in merged else ivs
        return Domain.of(merged)

    def is_empty(self) -> bool:
        return any(len(ivs) == 0 for _, ivs in self.intervals)

    def sample_point(self, space: CoordinateSpace, offset: int = 0) -> dict:
        point = space.sample_point(offset)
        fractions = (sp.Rational(1, 2), sp.Rational(1, 3), sp.Rational(3, 5), sp.Rational(5, 7))
        for i, (coord, ivs) in enumerate(self.intervals):
            if coord not in point or not ivs:
                continue
            lo, hi = ivs[(offset + i) % len(ivs)]
            point[coord] = lo + fractions[(offset + i) % len(fractions)] * (hi - lo)
        return point

    def sample_points(self, space: CoordinateSpace, count: int = 3) -> list:
        return [self.sample_point(space, k) for k in range(count)]

    def components(self) -> list:
        """One Domain per choice of interval in every constrained coordinate."""
        coords = [coord for coord, _ in self.intervals]
        choices = itertools.product(*(ivs for _, ivs in self.intervals))
        return [Domain.of({c: [iv] for c, iv in zip(coords, combo)}) for combo in choices]


# --- Manifold Models ---

@dataclass(frozen=True)
class ManifoldModel:
    kind: str
    space: CoordinateSpace
    factors: tuple = ()

    @property
    def dimension(self) -> int:
        return self.space.dimension

    @property
    def orientation(self) -> int:
        return 1


def circle_model(coord: str = "x") -> ManifoldModel:
    return ManifoldModel("circle", periodic_space(f"S1[{coord}]", [coord]))


def torus_model(coords) -> ManifoldModel:
    coords = tuple(coords)
    factors = tuple(circle_model(c) for c in coords)
    return ManifoldModel("torus", periodic_space(f"T{len(coords)}", coords), factors)


def box_model(coords, bounds=None) -> ManifoldModel:
    coords = tuple(coords)
    return ManifoldModel("box", affine_space(f"R{len(coords)}", coords, bounds))


def product_model(*models: ManifoldModel) -> ManifoldModel:
    flat = []
    for model in models:
        flat.extend(model.factors if model.kind == "product" else [model])
    space = flat[0].space
    for model in flat[1:]:
        space = space.product(model.space)
    return ManifoldModel("product", space, tuple(flat))


# --- Factor Covers ---

def smoothstep(y, kind: str):
    if kind == "c1cubic":
        return 3 * y ** 2 - 2 * y ** 3
    if kind == "pl":
        return y
    raise BadCoverError(f"Unknown partition of unity kind '{kind}'. Use one of {POU_KINDS}.")


@dataclass(frozen=True, eq=False)
class FactorCover:
    """Cover of one factor: element domains plus a subordinate partition of unity."""
    kind: str
    coords: tuple
    domains: tuple
    pou: tuple
    pou_kind: str = "c1cubic"
    overlap: sp.Expr = sp.Integer(0)
    bounds: tuple = ()

    @property
    def size(self) -> int:
        return len(self.domains)

    @property
    def ident(self) -> str:
        if self.kind == "chart":
            return f"chart({','.join(self.coords)})"
        return f"{self.kind}({self.coords[0]};{self.size};{self.overlap};{self.pou_kind})"

    def cells(self) -> list:
        """Breakpoint cells of the partition of unity inside the fundamental range with their nonzero pieces."""
        if self.kind == "chart":
            return [({}, {0: sp.Integer(1)})]
        coord = self.coords[0]
        lo, hi = self.bounds
        points = sorted({p for phi in self.pou for _, pts in phi.grid for p in pts if lo < p < hi})
        edges = [lo] + points + [hi]
        result = []
        for a, b in zip(edges[:-1], edges[1:]):
            middle = {coord: (a + b) / 2}
            active = {}
            for j, phi in enumerate(self.pou):
                piece = phi.piece_at(middle) if phi.grid else phi.pieces[()]
                if piece != 0:
                    active[j] = piece
            result.append(({coord: (a, b)}, active))
        return result

    def fundamental_cycle(self) -> list:
        """[(sign, (element, ...)), ...] of the top nerve level of this factor."""
        if self.kind == "chart":
            return [(1, (0,))]
        if self.kind != "circle":
            raise PreconditionError(f"Factor {self.ident} is not closed and has no fundamental cycle.")
        n = self.size
        cycle = [(1, (j, j + 1)) for j in range(n - 1)]
        cycle.append((-1, (0, n - 1)))
        return cycle


def _check_no_triple_overlaps(domains, label: str):
    for a, b, c in itertools.combinations(range(len(domains)), 3):
        if not domains[a].intersect(domains[b]).intersect(domains[c]).is_empty():
            raise BadCoverError(f"{label}: elements {a}, {b}, {c} have a common point (triple overlap).")


def build_circle_cover(n: int, overlap="1/24", coord: str = "x", pou: str = "c1cubic") -> "GoodCover":
    """n arcs of length 1/n + 2*overlap centred at j/n, with ramps of width overlap in the middle of each double overlap."""
    return GoodCover(circle_model(coord), (circle_factor(n, overlap, coord, pou),))


def circle_factor(n: int, overlap="1/24", coord: str = "x", pou: str = "c1cubic") -> FactorCover:
    if n < 3:
        raise BadCoverError(f"A circle cover needs at least 3 arcs, got {n}.")
    delta = as_exact(overlap)
    if delta <= 0:
        raise BadCoverError(f"Overlap must be positive, got {delta}.")
    half = sp.Rational(1, 2 * n) + delta
    domains = []
    for j in range(n):
        lo, hi = sp.Rational(j, n) - half, sp.Rational(j, n) + half
        if lo < 0:
            ivs = [(sp.Integer(0), hi), (lo + 1, sp.Integer(1))]
        elif hi > 1:
            ivs = [(lo, sp.Integer(1)), (sp.Integer(0), hi - 1)]
        else:
            ivs = [(lo, hi)]
        domains.append(Domain.of({coord: ivs}))
    _check_no_triple_overlaps(domains, f"circle cover n={n}, overlap={delta}")
    if delta >= sp.Rational(1, 2 * n):
        raise BadCoverError(f"Overlap {delta} must be below 1/(2n) = {sp.Rational(1, 2 * n)} so only consecutive arcs meet.")

    x = coord_symbol(coord)
    breakpoints = []
    for j in range(n):
        mid = sp.Rational(2 * j + 1, 2 * n)
        breakpoints += [mid - delta / 2, mid + delta / 2]
    cells = len(breakpoints) + 1
    functions = []
    for j in range(n):
        exprs = [sp.Integer(0)] * cells
        for ramp in range(n):
            a = breakpoints[2 * ramp]
            rise = smoothstep((x - a) / delta, pou)
            if ramp == j:
                exprs[2 * ramp + 1] = sp.expand(1 - rise)
            if (ramp + 1) % n == j:
                exprs[2 * ramp + 1] = sp.expand(rise)
        # plateau cells
        if j == 0:
            exprs[0] = sp.Integer(1)
            exprs[cells - 1] = sp.Integer(1)
        else:
            exprs[2 * j] = sp.Integer(1)
        functions.append(CoeffExpr.piecewise(coord, breakpoints, exprs, "C1" if pou == "c1cubic" else "C0"))
    factor = FactorCover("circle", (coord,), tuple(domains), tuple(functions), pou, delta, (sp.Integer(0), sp.Integer(1)))
    logging.info(f"Built circle cover on '{coord}' with {n} arcs, overlap {delta}, '{pou}' partition of unity.")
    return factor


def interval_factor(coord: str, bounds=(-1, 1), pieces: int = 2, overlap=None, pou: str = "c1cubic") -> FactorCover:
    lo, hi = as_exact(bounds[0]), as_exact(bounds[1])
    length = hi - lo
    if pieces == 1:
        return FactorCover("chart", (coord,), (Domain(),), (CoeffExpr.of(1),), pou, sp.Integer(0), (lo, hi))
    width = as_exact(overlap) if overlap is not None else length / (4 * pieces)
    if width >= length / (2 * pieces):
        raise BadCoverError(f"Interval overlap {width} too large for {pieces} charts of [{lo}, {hi}].")
    cuts = [lo + length * sp.Rational(j + 1, pieces) for j in range(pieces - 1)]
    domains = []
    for j in range(pieces):
        left = lo if j == 0 else cuts[j - 1] - width
        right = hi if j == pieces - 1 else cuts[j] + width
        domains.append(Domain.of({coord: [(left, right)]}))
    _check_no_triple_overlaps(domains, f"interval cover of '{coord}'")
    x = coord_symbol(coord)
    breakpoints = []
    for c in cuts:
        breakpoints += [c - width / 2, c + width / 2]
    cells = len(breakpoints) + 1
    functions = []
    for j in range(pieces):
        exprs = [sp.Integer(0)] * cells
        exprs[2 * j] = sp.Integer(1)
        if j < pieces - 1:
            exprs[2 * j + 1] = sp.expand(1 - smoothstep((x - breakpoints[2 * j]) / width, pou))
        if j > 0:
            exprs[2 * j - 1] = sp.expand(smoothstep((x - breakpoints[2 * j - 2]) / width, pou))
        functions.append(CoeffExpr.piecewise(coord, breakpoints, exprs, "C1" if pou == "c1cubic" else "C0"))
    return FactorCover("interval", (coord,), tuple(domains), tuple(functions), pou, width, (lo, hi))


def chart_factor(coords) -> FactorCover:
    return FactorCover("chart", tuple(coords), (Domain(),), (CoeffExpr.of(1),), "c1cubic", sp.Integer(0), ())


def single_chart_cover(model: ManifoldModel) -> "GoodCover":
    return GoodCover(model, (chart_factor(model.space.coords),))


def torus_cover(coords, n: int = 3, overlap="1/24", pou: str = "c1cubic") -> "GoodCover":
    factors = tuple(circle_factor(n, overlap, c, pou) for c in coords)
    return GoodCover(torus_model(coords), factors)


def box_cover(coords, bounds=None, pieces: int = 1, pou: str = "c1cubic") -> "GoodCover":
    model = box_model(coords, bounds)
    if pieces == 1:
        return single_chart_cover(model)
    factors = tuple(interval_factor(c, model.space.bound(c), pieces, None, pou) for c in model.space.coords)
    return GoodCover(model, factors)


# --- Covers ---

@dataclass(eq=False)
class GoodCover:
    model: ManifoldModel
    factors: tuple
    _intersections: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def space(self) -> CoordinateSpace:
        return self.model.space

    @property
    def ident(self) -> str:
        return " x ".join(f.ident for f in self.factors)

    @cached_property
    def labels(self) -> list:
        return list(itertools.product(*(range(f.size) for f in self.factors)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def position(self, label: tuple) -> int:
        pos = 0
        for factor, k in zip(self.factors, label):
            pos = pos * factor.size + k
        return pos

    def label(self, position: int) -> tuple:
        return self.labels[position]

    def domain(self, position: int) -> Domain:
        result = Domain()
        for factor, k in zip(self.factors, self.label(position)):
            result = result.intersect(factor.domains[k])
        return result

    def intersection(self, positions) -> Domain:
        key = frozenset(positions)
        with self._lock:
            if key in self._intersections:
                return self._intersections[key]
        result = Domain()
        for pos in sorted(key):
            result = result.intersect(self.domain(pos))
        with self._lock:
            self._intersections[key] = result
        return result

    @cached_property
    def pou(self) -> tuple:
        functions = []
        for label in self.labels:
            phi = CoeffExpr.of(1)
            for factor, k in zip(self.factors, label):
                phi = phi * factor.pou[k]
            functions.append(phi)
        return tuple(functions)

    def pou_sum_is_one(self) -> bool:
        total = CoeffExpr.of(0)
        for phi in self.pou:
            total = total + phi
        return (total - 1).is_zero()

    def pou_cells(self) -> list:
        """[(box, {position: phi piece})] over the product of factor cells; only nonzero pieces are listed."""
        result = []
        for combo in itertools.product(*(f.cells() for f in self.factors)):
            box = {}
            actives = []
            for cell_box, active in combo:
                box.update(cell_box)
                actives.append(active)
            pieces = {}
            for picks in itertools.product(*(sorted(a.items()) for a in actives)):
                label = tuple(k for k, _ in picks)
                expr = sp.Integer(1)
                for _, piece in picks:
                    expr = expr * piece
                pieces[self.position(label)] = sp.expand(expr)
            result.append((box, pieces))
        return result

    @cached_property
    def nerve(self) -> "Nerve":
        return Nerve(self)

    def fundamental_cycle(self) -> list:
        """
        Top-dimensional Cech cycle of a closed model, oriented by the coordinate order of the model space.
        Factor cycles are combined by the Eilenberg-Zilber shuffle product.
        """
        order = sorted(range(len(self.factors)), key=lambda k: self.space.index(self.factors[k].coords[0]))
        chain = [(1, [dict()])]
        for k in order:
            factor_chain = [(s, [{k: v} for v in simplex]) for s, simplex in self.factors[k].fundamental_cycle()]
            chain = chain_product(chain, factor_chain)
        cycle = {}
        for sign, vertices in chain:
            simplex = tuple(self.position(tuple(v[k] for k in range(len(self.factors)))) for v in vertices)
            cycle[simplex] = cycle.get(simplex, 0) + sign
        return [(sign, simplex) for simplex, sign in sorted(cycle.items()) if sign != 0]


def shuffle_paths(p: int, q: int) -> list:
    """
    Lattice paths from (0, 0) to (p, q) with unit steps, as (sign, [(mu_r, nu_r), ...]).
    The sign is that of the shuffle placing the first-coordinate steps first.
    """
    paths = []
    n = p + q
    for steps in itertools.combinations(range(n), p):
        chosen = set(steps)
        mu = nu = 0
        vertices = [(0, 0)]
        for r in range(n):
            if r in chosen:
                mu += 1
            else:
                nu += 1
            vertices.append((mu, nu))
        sign = (-1) ** sum(s - i for i, s in enumerate(steps))
        paths.append((sign, vertices))
    return paths


def chain_product(a: list, b: list) -> list:
    """Eilenberg-Zilber product of chains whose vertices are dicts of factor labels."""
    result = []
    for (sa, va), (sb, vb) in itertools.product(a, b):
        for sign, path in shuffle_paths(len(va) - 1, len(vb) - 1):
            vertices = [{**va[m], **vb[n]} for m, n in path]
            result.append((sa * sb * sign, vertices))
    return result


def product_cover(a: GoodCover, b: GoodCover) -> GoodCover:
    """
    Cover of Y = X x Z from a base cover `a` of Z and a fibre cover `b` of X.
    Elements of `a` vary slowest (base index before fibre index); the model space
    lists the fibre coordinates first, which fixes the orientation of Y.
    """
    model = product_model(b.model, a.model)
    return GoodCover(model, a.factors + b.factors)


# --- Nerve ---

def face(simplex: tuple, i: int) -> tuple:
    if not 0 <= i < len(simplex):
        raise NerveIndexError(f"Face index {i} out of range for a {len(simplex) - 1}-simplex {simplex}.")
    return simplex[:i] + simplex[i + 1:]


def degeneracy(simplex: tuple, i: int) -> tuple:
    if not 0 <= i < len(simplex):
        raise NerveIndexError(f"Degeneracy index {i} out of range for a {len(simplex) - 1}-simplex {simplex}.")
    return simplex[:i + 1] + simplex[i:]


def is_degenerate(simplex: tuple) -> bool:
    return any(a == b for a, b in zip(simplex[:-1], simplex[1:]))


def reduce_simplex(simplex: tuple) -> tuple:
    """Drops repeated indices; returns (non-degenerate simplex, list of kept positions)."""
    kept = [0] + [r for r in range(1, len(simplex)) if simplex[r] != simplex[r - 1]]
    return tuple(simplex[r] for r in kept), kept


class Nerve:
    """Ordered-tuple nerve of a cover; levels are enumerated on demand and cached."""

    def __init__(self, cover: GoodCover):
        self.cover = cover
        self._levels = {}
        self._lock = threading.Lock()

    def contains(self, simplex: tuple) -> bool:
        return not self.cover.intersection(simplex).is_empty()

    def level(self, p: int) -> list:
        with self._lock:
            if p in self._levels:
                return self._levels[p]
        if p == 0:
            tuples = [(i,) for i in range(self.cover.size) if not self.cover.domain(i).is_empty()]
        else:
            tuples = []
            for simplex in self.level(p - 1):
                for j in range(simplex[-1], self.cover.size):
                    extended = simplex + (j,)
                    if self.contains(extended):
                        tuples.append(extended)
        with self._lock:
            self._levels[p] = tuples
        logging.info(f"Nerve of '{self.cover.ident}': level {p} has {len(tuples)} tuples.")
        return tuples

    def nondegenerate(self, p: int) -> list:
        return [s for s in self.level(p) if not is_degenerate(s)]

    @cached_property
    def dimension(self) -> int:
        p = 0
        while self.nondegenerate(p + 1):
            p += 1
        return p


def nerve_faces(nerve: Nerve, p: int, i: int) -> dict:
    if not 0 <= i <= p:
        raise NerveIndexError(f"Face index {i} out of range for level {p}.")
    return {simplex: face(simplex, i) for simplex in nerve.level(p)}


def nerve_degeneracies(nerve: Nerve, p: int, i: int) -> dict:
    if not 0 <= i <= p:
        raise NerveIndexError(f"Degeneracy index {i} out of range for level {p}.")
    return {simplex: degeneracy(simplex, i) for simplex in nerve.level(p)}


def simplicial_identity_violations(nerve: Nerve, max_level: int) -> list:
    """Exhaustive check of the face/degeneracy identities on nerve tuples up to max_level."""
    violations = []
    for p in range(1, max_level + 1):
        for simplex in nerve.level(p):
            for i, j in itertools.combinations(range(p + 1), 2):
                if face(face(simplex, j), i) != face(face(simplex, i), j - 1):
                    violations.append(("face-face", simplex, i, j))
            for j in range(p + 1):
                for i in range(p + 2):
                    left = face(degeneracy(simplex, j), i)
                    if i == j or i == j + 1:
                        right = simplex
                    elif i < j:
                        right = degeneracy(face(simplex, i), j - 1)
                    else:
                        right = degeneracy(face(simplex, i - 1), j)
                    if left != right:
                        violations.append(("face-degeneracy", simplex, i, j))
    return violations


def cover_from_config(spec: dict, coord: str = "x") -> GoodCover:
    """Builds a cover from a scenario dict {model, arcs, delta, pou}."""
    model = spec.get("model", "circle")
    pou = spec.get("pou", "c1cubic")
    if pou not in POU_KINDS:
        raise BadCoverError(f"Unknown partition of unity kind '{pou}'. Use one of {POU_KINDS}.")
    if model == "circle":
        return build_circle_cover(int(spec.get("arcs", 3)), spec.get("delta", "1/24"), spec.get("coord", coord), pou)
    if model == "torus":
        return torus_cover(spec["coords"], int(spec.get("arcs", 3)), spec.get("delta", "1/24"), pou)
    if model == "box":
        return box_cover(spec["coords"], spec.get("bounds"), int(spec.get("pieces", 1)), pou)
    raise BadCoverError(f"Unknown cover model '{model}'.")

