"""
Exact and numeric exterior algebra over named chart products.

Coefficients are sympy expressions, optionally piecewise over a rational
breakpoint grid (the partitions of unity and coordinate lifts need that).
Forms store each wedge monomial sorted by the coordinate order of their space.
"""

import itertools
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache

import sympy as sp

from .errors import CoordinateNameError, DifferentiabilityError, SpaceMismatchError
from .quadrature import compensated_sum, duffy_simplex_rule, gauss_legendre, tensor_rule

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

PERIODIC = "periodic"
ANGULAR = "angular"
AFFINE = "affine"
BARYCENTRIC = "barycentric"

CONTINUITY_ORDER = ("none", "C0", "C1", "Cinf")


@lru_cache(maxsize=None)
def coord_symbol(name: str) -> sp.Symbol:
    return sp.Symbol(name, real=True)


def as_exact(value) -> sp.Expr:
    """Converts ints, strings like '1/24' and sympy numbers to exact sympy values."""
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, float):
        return sp.Rational(str(value))
    if isinstance(value, str):
        parsed = sp.sympify(value)
        return parsed.xreplace({s: coord_symbol(s.name) for s in parsed.free_symbols})
    return sp.Integer(value)


def _is_zero_expr(expr) -> bool:
    if expr == 0:
        return True
    expanded = sp.expand(expr)
    if expanded == 0:
        return True
    if not expanded.has(sp.sin, sp.cos, sp.exp):
        return False
    return sp.simplify(expanded) == 0


# --- Coordinate Spaces ---

@dataclass(frozen=True)
class CoordinateSpace:
    name: str = field(compare=False)
    coords: tuple
    kinds: tuple
    bounds: tuple

    def __post_init__(self):
        if len(set(self.coords)) != len(self.coords):
            raise SpaceMismatchError(f"Duplicate coordinate names in space '{self.name}': {self.coords}")
        if not (len(self.coords) == len(self.kinds) == len(self.bounds)):
            raise SpaceMismatchError(f"Space '{self.name}' needs one kind and one bound per coordinate.")

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def index(self, coord: str) -> int:
        try:
            return self.coords.index(coord)
        except ValueError:
            raise CoordinateNameError(f"Unknown coordinate '{coord}' in space '{self.name}' {self.coords}")

    def kind(self, coord: str) -> str:
        return self.kinds[self.index(coord)]

    def bound(self, coord: str) -> tuple:
        return self.bounds[self.index(coord)]

    def period(self, coord: str) -> sp.Expr:
        lo, hi = self.bound(coord)
        return hi - lo

    def symbols(self) -> tuple:
        return tuple(coord_symbol(c) for c in self.coords)

    def product(self, other: "CoordinateSpace", name: str | None = None) -> "CoordinateSpace":
        clash = set(self.coords) & set(other.coords)
        if clash:
            raise SpaceMismatchError(f"Cannot form product of '{self.name}' and '{other.name}': shared coordinates {sorted(clash)}")
        return CoordinateSpace(
            name or f"{self.name}x{other.name}",
            self.coords + other.coords,
            self.kinds + other.kinds,
            self.bounds + other.bounds,
        )

    def without(self, coords) -> "CoordinateSpace":
        drop = set(coords)
        for coord in drop:
            self.index(coord)
        keep = [i for i, c in enumerate(self.coords) if c not in drop]
        return CoordinateSpace(
            f"{self.name}/{'.'.join(sorted(drop))}" if drop else self.name,
            tuple(self.coords[i] for i in keep),
            tuple(self.kinds[i] for i in keep),
            tuple(self.bounds[i] for i in keep),
        )

    def contains(self, other: "CoordinateSpace") -> bool:
        return set(other.coords) <= set(self.coords)

    def sample_point(self, offset: int = 0) -> dict:
        """A deterministic interior point; different offsets give different points."""
        fractions = (sp.Rational(3, 7), sp.Rational(5, 11), sp.Rational(2, 9), sp.Rational(7, 13))
        point = {}
        for i, (coord, (lo, hi)) in enumerate(zip(self.coords, self.bounds)):
            frac = fractions[(i + offset) % len(fractions)]
            point[coord] = lo + frac * (hi - lo)
        return point


def periodic_space(name: str, coords) -> CoordinateSpace:
    coords = tuple(coords)
    return CoordinateSpace(name, coords, (PERIODIC,) * len(coords), ((sp.Integer(0), sp.Integer(1)),) * len(coords))


def affine_space(name: str, coords, bounds=None) -> CoordinateSpace:
    coords = tuple(coords)
    if bounds is None:
        bounds = [(-1, 1)] * len(coords)
    exact = tuple((as_exact(lo), as_exact(hi)) for lo, hi in bounds)
    return CoordinateSpace(name, coords, (AFFINE,) * len(coords), exact)


def angular_space(name: str, coords) -> CoordinateSpace:
    coords = tuple(coords)
    return CoordinateSpace(name, coords, (ANGULAR,) * len(coords), ((sp.Integer(0), 2 * sp.pi),) * len(coords))


@lru_cache(maxsize=None)
def simplex_space(p: int) -> CoordinateSpace:
    """Free barycentric coordinates t1..tp of the standard p-simplex."""
    coords = tuple(f"t{i}" for i in range(1, p + 1))
    return CoordinateSpace(f"Delta{p}", coords, (BARYCENTRIC,) * p, ((sp.Integer(0), sp.Integer(1)),) * p)


def barycentric_coordinates(p: int) -> list:
    """[t_0, t_1, ..., t_p] with t_0 = 1 - (t_1 + ... + t_p)."""
    free = [coord_symbol(f"t{i}") for i in range(1, p + 1)]
    return [1 - sum(free, sp.Integer(0))] + free


# --- Coefficients ---

def _merge_grids(*grids) -> tuple:
    merged = {}
    for grid in grids:
        for coord, points in grid:
            merged.setdefault(coord, set()).update(points)
    return tuple(sorted((coord, tuple(sorted(points))) for coord, points in merged.items()))


def _grid_cells(grid):
    return itertools.product(*(range(len(points) + 1) for _, points in grid))


def _cell_interval(points, k):
    lo = points[k - 1] if k > 0 else None
    hi = points[k] if k < len(points) else None
    return lo, hi


def _cell_sample(grid, cell) -> dict:
    sample = {}
    for (coord, points), k in zip(grid, cell):
        lo, hi = _cell_interval(points, k)
        if lo is None and hi is None:
            sample[coord] = sp.Integer(0)
        elif lo is None:
            sample[coord] = hi - 1
        elif hi is None:
            sample[coord] = lo + 1
        else:
            sample[coord] = (lo + hi) / 2
    return sample


def _locate(grid, point) -> tuple:
    return tuple(bisect_right(points, point[coord]) for coord, points in grid)


def _interval_overlaps(lo, hi, intervals) -> bool:
    for a, b in intervals:
        left = a if lo is None else max(lo, a)
        right = b if hi is None else min(hi, b)
        if left < right:
            return True
    return False


class CoeffExpr:
    """
    Exact scalar coefficient: a sympy expression per cell of a rational breakpoint grid.
    A grid-free coefficient is a single smooth expression stored under the empty cell ().
    """

    __slots__ = ("grid", "pieces", "continuity")

    def __init__(self, pieces: dict, grid: tuple = (), continuity: str = "Cinf"):
        self.grid = tuple(grid)
        self.pieces = dict(pieces)
        self.continuity = continuity

    # -- constructors --
    @classmethod
    def of(cls, value) -> "CoeffExpr":
        if isinstance(value, (CoeffExpr, NumericCoeff)):
            return value
        return cls({(): as_exact(value)})

    @classmethod
    def piecewise(cls, coord: str, breakpoints, exprs, continuity: str = "C0") -> "CoeffExpr":
        points = tuple(as_exact(b) for b in breakpoints)
        if len(exprs) != len(points) + 1:
            raise ValueError(f"Piecewise coefficient in '{coord}' needs {len(points) + 1} pieces, got {len(exprs)}.")
        pieces = {(k,): as_exact(e) for k, e in enumerate(exprs)}
        return cls(pieces, ((coord, points),), continuity)._compact()

    # -- structure --
    def _refined(self, grid) -> dict:
        if grid == self.grid:
            return self.pieces
        return {cell: self.pieces[_locate(self.grid, _cell_sample(grid, cell))] for cell in _grid_cells(grid)}

    def _compact(self) -> "CoeffExpr":
        grid, pieces = self.grid, self.pieces
        k = 0
        while k < len(grid):
            groups = {}
            for cell, expr in pieces.items():
                groups.setdefault(cell[:k] + cell[k + 1:], set()).add(expr)
            if all(len(exprs) == 1 for exprs in groups.values()):
                pieces = {cell[:k] + cell[k + 1:]: expr for cell, expr in pieces.items()}
                grid = grid[:k] + grid[k + 1:]
            else:
                k += 1
        if grid is self.grid:
            return self
        return CoeffExpr(pieces, grid, self.continuity)

    def _combine(self, other, op) -> "CoeffExpr":
        if isinstance(other, NumericCoeff):
            return op(self.to_numeric(other.order), other)
        other = CoeffExpr.of(other)
        grid = _merge_grids(self.grid, other.grid)
        a, b = self._refined(grid), other._refined(grid)
        continuity = min(self.continuity, other.continuity, key=CONTINUITY_ORDER.index)
        return CoeffExpr({cell: sp.expand(op(a[cell], b[cell])) for cell in a}, grid, continuity)._compact()

    def grid_coords(self) -> tuple:
        return tuple(coord for coord, _ in self.grid)

    def free_coords(self) -> set:
        names = set(self.grid_coords())
        for expr in self.pieces.values():
            names.update(s.name for s in expr.free_symbols)
        return names

    # -- arithmetic --
    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return CoeffExpr.of(other) - self

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return CoeffExpr({cell: -e for cell, e in self.pieces.items()}, self.grid, self.continuity)

    # -- calculus --
    def diff(self, coord: str) -> "CoeffExpr":
        sym = coord_symbol(coord)
        rank = max(CONTINUITY_ORDER.index(self.continuity) - 1, 0) if self.continuity != "Cinf" else 3
        pieces = {cell: sp.diff(e, sym) for cell, e in self.pieces.items()}
        return CoeffExpr(pieces, self.grid, CONTINUITY_ORDER[rank])._compact()

    def subs(self, mapping: dict) -> "CoeffExpr":
        """
        Simultaneous substitution. A grid coordinate may be fixed to a constant or mapped
        affinely onto a single new coordinate; anything else raises.
        """
        mapping = {coord: as_exact(expr) for coord, expr in mapping.items()}
        grid = []
        pieces = dict(self.pieces)
        axis = 0
        for coord, points in self.grid:
            if coord not in mapping:
                grid.append((coord, points))
                axis += 1
                continue
            target = mapping[coord]
            symbols = list(target.free_symbols)
            if not symbols:
                chosen = bisect_right(points, target)
                pieces = {cell[:axis] + cell[axis + 1:]: e for cell, e in pieces.items() if cell[axis] == chosen}
                continue
            if len(symbols) != 1 or sp.Poly(target, symbols[0]).degree() != 1:
                raise SpaceMismatchError(f"Piecewise coordinate '{coord}' can only be substituted affinely, got {target}.")
            new_sym = symbols[0]
            slope = sp.diff(target, new_sym)
            offset = target.subs(new_sym, 0)
            new_points = tuple((p - offset) / slope for p in points)
            if slope < 0:
                new_points = tuple(reversed(new_points))
                last = len(points)
                pieces = {cell[:axis] + (last - cell[axis],) + cell[axis + 1:]: e for cell, e in pieces.items()}
            grid.append((new_sym.name, new_points))
            axis += 1
        names = [coord for coord, _ in grid]
        if len(set(names)) != len(names):
            raise SpaceMismatchError(f"Substitution merges piecewise coordinates {names}.")
        substitution = {coord_symbol(coord): expr for coord, expr in mapping.items()}
        pieces = {cell: e.xreplace(substitution) for cell, e in pieces.items()}
        order = sorted(range(len(grid)), key=lambda k: grid[k][0])
        grid = tuple(grid[k] for k in order)
        pieces = {tuple(cell[k] for k in order): e for cell, e in pieces.items()}
        return CoeffExpr(pieces, grid, self.continuity)._compact()

    def integrate(self, coord: str, a, b) -> "CoeffExpr":
        sym = coord_symbol(coord)
        a, b = as_exact(a), as_exact(b)
        if coord not in self.grid_coords():
            pieces = {cell: sp.integrate(sp.expand(e), (sym, a, b)) for cell, e in self.pieces.items()}
            return CoeffExpr(pieces, self.grid, self.continuity)._compact()
        k = self.grid_coords().index(coord)
        points = self.grid[k][1]
        grid = self.grid[:k] + self.grid[k + 1:]
        pieces = {}
        for cell, expr in self.pieces.items():
            lo, hi = _cell_interval(points, cell[k])
            left = a if lo is None else max(lo, a)
            right = b if hi is None else min(hi, b)
            if not left < right:
                continue
            key = cell[:k] + cell[k + 1:]
            pieces[key] = pieces.get(key, sp.Integer(0)) + sp.integrate(sp.expand(expr), (sym, left, right))
        for cell in _grid_cells(grid):
            pieces.setdefault(cell, sp.Integer(0))
        return CoeffExpr(pieces, grid, self.continuity)._compact()

    def integrate_simplex(self, coords) -> "CoeffExpr":
        """Integrates over the simplex {t_i >= 0, sum t_i <= 1} in the given free coordinates."""
        symbols = [coord_symbol(c) for c in coords]
        if set(coords) & set(self.grid_coords()):
            raise SpaceMismatchError("Simplex coordinates cannot carry breakpoints.")
        pieces = {}
        for cell, expr in self.pieces.items():
            value = sp.expand(expr)
            for i in reversed(range(len(symbols))):
                upper = 1 - sum(symbols[:i], sp.Integer(0))
                value = sp.expand(sp.integrate(value, (symbols[i], 0, upper)))
            pieces[cell] = value
        return CoeffExpr(pieces, self.grid, self.continuity)._compact()

    # -- inspection --
    def piece_at(self, point: dict) -> sp.Expr:
        return self.pieces[_locate(self.grid, point)]

    def evaluate(self, point: dict) -> sp.Expr:
        expr = self.piece_at(point)
        return expr.xreplace({coord_symbol(c): as_exact(v) for c, v in point.items()})

    def is_zero(self) -> bool:
        return all(_is_zero_expr(e) for e in self.pieces.values())

    def is_zero_on(self, domain: dict) -> bool:
        for cell, expr in self.pieces.items():
            inside = True
            for (coord, points), k in zip(self.grid, cell):
                if coord in domain and not _interval_overlaps(*_cell_interval(points, k), domain[coord]):
                    inside = False
                    break
            if inside and not _is_zero_expr(expr):
                return False
        return True

    def to_numeric(self, order: int = 8) -> "NumericCoeff":
        compiled = {}
        ordered = sorted(self.free_coords())
        symbols = [coord_symbol(c) for c in ordered]

        def fn(point):
            cell = _locate(self.grid, point)
            if cell not in compiled:
                compiled[cell] = sp.lambdify(symbols, self.pieces[cell], "numpy")
            return float(compiled[cell](*(point[c] for c in ordered)))

        return NumericCoeff(fn, ordered, self.grid, source=self, order=order)

    def to_json(self) -> dict:
        return {
            "grid": {coord: [str(p) for p in points] for coord, points in self.grid},
            "pieces": [{"cell": list(cell), "expr": str(expr)} for cell, expr in sorted(self.pieces.items())],
            "continuity": self.continuity,
        }

    def __repr__(self):
        if not self.grid:
            return str(self.pieces[()])
        return f"Piecewise[{self.grid_coords()}]({len(self.pieces)} cells)"


class NumericCoeff:
    """
    Floating-point coefficient given by a point callback. It keeps the exact source
    when it was converted from one, which is what keeps d available.
    """

    __slots__ = ("fn", "coords", "grid", "source", "order")

    def __init__(self, fn, coords, grid=(), source=None, order: int = 8):
        self.fn = fn
        self.coords = tuple(coords)
        self.grid = tuple(grid)
        self.source = source
        self.order = order

    def _combine(self, other, op, exact_op):
        if isinstance(other, CoeffExpr) or not isinstance(other, NumericCoeff):
            other = CoeffExpr.of(other).to_numeric(self.order)
        source = None
        if self.source is not None and other.source is not None:
            source = exact_op(self.source, other.source)
        f, g = self.fn, other.fn
        return NumericCoeff(
            lambda point: op(f(point), g(point)),
            sorted(set(self.coords) | set(other.coords)),
            _merge_grids(self.grid, other.grid),
            source=source,
            order=self.order,
        )

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b, lambda a, b: a - b)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        f = self.fn
        source = -self.source if self.source is not None else None
        return NumericCoeff(lambda point: -f(point), self.coords, self.grid, source, self.order)

    def free_coords(self) -> set:
        return set(self.coords)

    def diff(self, coord: str):
        if self.source is None:
            raise DifferentiabilityError(f"Numeric coefficient over {self.coords} has no exact source; d is unavailable.")
        return self.source.diff(coord).to_numeric(self.order)

    def subs(self, mapping: dict):
        compiled = {}
        for coord, expr in mapping.items():
            expr = as_exact(expr)
            names = sorted(s.name for s in expr.free_symbols)
            compiled[coord] = (names, sp.lambdify([coord_symbol(n) for n in names], expr, "numpy"))
        f = self.fn

        def fn(point):
            moved = dict(point)
            for coord, (names, func) in compiled.items():
                moved[coord] = float(func(*(point[n] for n in names)))
            return f(moved)

        coords = (set(self.coords) - set(mapping)) | {n for names, _ in compiled.values() for n in names}
        source = self.source.subs(mapping) if self.source is not None else None
        return NumericCoeff(fn, sorted(coords), (), source, self.order)

    def integrate(self, coord: str, a, b):
        a, b = float(as_exact(a)), float(as_exact(b))
        cuts = [a]
        for grid_coord, points in self.grid:
            if grid_coord == coord:
                cuts += [float(p) for p in points if a < float(p) < b]
        cuts.append(b)
        rules = [gauss_legendre(self.order, lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:])]
        f = self.fn

        def fn(point):
            values = []
            for nodes, weights in rules:
                for node, weight in zip(nodes, weights):
                    values.append(weight * f({**point, coord: float(node)}))
            return compensated_sum(values)

        grid = tuple((c, pts) for c, pts in self.grid if c != coord)
        return NumericCoeff(fn, [c for c in self.coords if c != coord], grid, None, self.order)

    def integrate_box(self, bounds: dict):
        """Tensor-product rule over all coordinates in `bounds` at once, split at grid breakpoints."""
        coords = list(bounds)
        pieces = []
        for coord in coords:
            a, b = (float(as_exact(v)) for v in bounds[coord])
            cuts = [a]
            for grid_coord, points in self.grid:
                if grid_coord == coord:
                    cuts += sorted(float(p) for p in points if a < float(p) < b)
            cuts.append(b)
            pieces.append(list(zip(cuts[:-1], cuts[1:])))
        rules = [tensor_rule(self.order, cell) for cell in itertools.product(*pieces)]
        f = self.fn

        def fn(point):
            values = []
            for nodes, weights in rules:
                for node, weight in zip(nodes, weights):
                    values.append(weight * f({**point, **{c: float(v) for c, v in zip(coords, node)}}))
            return compensated_sum(values)

        grid = tuple((c, pts) for c, pts in self.grid if c not in bounds)
        return NumericCoeff(fn, [c for c in self.coords if c not in bounds], grid, None, self.order)

    def integrate_simplex(self, coords):
        nodes, weights = duffy_simplex_rule(len(coords), self.order)
        f = self.fn

        def fn(point):
            values = []
            for node, weight in zip(nodes, weights):
                values.append(weight * f({**point, **{c: float(v) for c, v in zip(coords, node)}}))
            return compensated_sum(values)

        return NumericCoeff(fn, [c for c in self.coords if c not in coords], self.grid, None, self.order)

    def evaluate(self, point: dict) -> float:
        return self.fn({c: float(v) for c, v in point.items()})

    def is_zero(self) -> bool:
        return False

    def is_zero_on(self, domain: dict) -> bool:
        return False

    def to_numeric(self, order: int = 8):
        return self

    def to_json(self) -> dict:
        return {"numeric": True, "coords": list(self.coords), "order": self.order}

    def __repr__(self):
        return f"Numeric({', '.join(self.coords)})"


def as_coeff(value):
    return CoeffExpr.of(value)


# --- Forms ---

def _sort_monomial(space: CoordinateSpace, coords) -> tuple:
    """Returns (sign, sorted monomial); sign 0 when a differential repeats."""
    idx = [space.index(c) for c in coords]
    if len(set(idx)) < len(idx):
        return 0, None
    inversions = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx)) if idx[a] > idx[b])
    ordered = tuple(space.coords[i] for i in sorted(idx))
    return (-1) ** inversions, ordered


def _extract_left(mono, selected) -> tuple:
    """Sign of moving the selected differentials (kept in order) to the far left, and the remainder."""
    swaps = 0
    seen_rest = 0
    rest = []
    for coord in mono:
        if coord in selected:
            swaps += seen_rest
        else:
            seen_rest += 1
            rest.append(coord)
    return (-1) ** swaps, tuple(rest)


class ExteriorForm:
    """Homogeneous differential form: {sorted wedge monomial: coefficient} on a CoordinateSpace."""

    __slots__ = ("space", "terms", "degree")

    def __init__(self, space: CoordinateSpace, terms: dict | None = None, degree: int = 0):
        self.space = space
        self.degree = degree
        self.terms = {}
        for mono, coeff in (terms or {}).items():
            if len(mono) != degree:
                raise ValueError(f"Monomial {mono} does not have degree {degree}.")
            coeff = as_coeff(coeff)
            if isinstance(coeff, CoeffExpr) and coeff.is_zero():
                continue
            self.terms[mono] = coeff

    # -- constructors --
    @classmethod
    def zero(cls, space, degree: int = 0) -> "ExteriorForm":
        return cls(space, {}, degree)

    @classmethod
    def function(cls, space, coeff) -> "ExteriorForm":
        return cls(space, {(): coeff}, 0)

    @classmethod
    def differential(cls, space, coord: str) -> "ExteriorForm":
        space.index(coord)
        return cls(space, {(coord,): 1}, 1)

    @classmethod
    def from_terms(cls, space, terms, degree: int | None = None) -> "ExteriorForm":
        """terms: iterable of (coefficient, [coordinate names]) in any order."""
        collected = {}
        for coeff, coords in terms:
            sign, mono = _sort_monomial(space, coords)
            if sign == 0:
                continue
            degree = len(mono) if degree is None else degree
            value = as_coeff(coeff) * sign
            collected[mono] = collected[mono] + value if mono in collected else value
        return cls(space, collected, degree or 0)

    # -- helpers --
    def _check_space(self, other: "ExteriorForm"):
        if self.space != other.space:
            raise SpaceMismatchError(f"Forms live on different spaces: '{self.space.name}' vs '{other.space.name}'.")

    def _check_degree(self, other: "ExteriorForm"):
        if self.degree != other.degree and self.terms and other.terms:
            raise ValueError(f"Cannot add forms of degrees {self.degree} and {other.degree}.")

    # -- arithmetic --
    def __add__(self, other: "ExteriorForm") -> "ExteriorForm":
        self._check_space(other)
        self._check_degree(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            terms[mono] = terms[mono] + coeff if mono in terms else coeff
        return ExteriorForm(self.space, terms, self.degree if self.terms else other.degree)

    def __neg__(self) -> "ExteriorForm":
        return ExteriorForm(self.space, {m: -c for m, c in self.terms.items()}, self.degree)

    def __sub__(self, other: "ExteriorForm") -> "ExteriorForm":
        return self + (-other)

    def scale(self, factor) -> "ExteriorForm":
        factor = as_coeff(factor)
        return ExteriorForm(self.space, {m: factor * c for m, c in self.terms.items()}, self.degree)

    def wedge(self, other: "ExteriorForm") -> "ExteriorForm":
        self._check_space(other)
        collected = {}
        for (m1, c1), (m2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            sign, mono = _sort_monomial(self.space, m1 + m2)
            if sign == 0:
                continue
            value = c1 * c2 if sign > 0 else -(c1 * c2)
            collected[mono] = collected[mono] + value if mono in collected else value
        return ExteriorForm(self.space, collected, self.degree + other.degree)

    def power(self, n: int) -> "ExteriorForm":
        result = ExteriorForm.function(self.space, 1)
        for _ in range(n):
            result = result.wedge(self)
        return result

    # -- calculus --
    def d(self) -> "ExteriorForm":
        collected = {}
        for mono, coeff in self.terms.items():
            for coord in self.space.coords:
                if coord in mono or coord not in coeff.free_coords():
                    continue
                partial = coeff.diff(coord)
                if isinstance(partial, CoeffExpr) and partial.is_zero():
                    continue
                sign, new = _sort_monomial(self.space, (coord,) + mono)
                value = partial if sign > 0 else -partial
                collected[new] = collected[new] + value if new in collected else value
        return ExteriorForm(self.space, collected, self.degree + 1)

    def pullback(self, target: CoordinateSpace, mapping: dict | None = None) -> "ExteriorForm":
        """
        Pulls back along the map given by `mapping` (source coordinate -> expression in target
        coordinates). Source coordinates missing from `mapping` must exist in the target.
        """
        mapping = {coord: as_exact(expr) for coord, expr in (mapping or {}).items()}
        target_symbols = set(target.symbols())
        for coord, expr in mapping.items():
            self.space.index(coord)
            unknown = [s.name for s in expr.free_symbols if s not in target_symbols]
            if unknown:
                raise CoordinateNameError(f"Substitution for '{coord}' references unknown coordinates {unknown}.")
        differentials = {}
        for coord in self.space.coords:
            if coord in mapping:
                expr = mapping[coord]
                differentials[coord] = ExteriorForm.from_terms(
                    target, [(sp.diff(expr, coord_symbol(c)), [c]) for c in target.coords], degree=1
                )
            else:
                differentials[coord] = ExteriorForm.differential(target, coord)
        substitution = {c: e for c, e in mapping.items()}
        result = ExteriorForm.zero(target, self.degree)
        for mono, coeff in self.terms.items():
            moved = coeff.subs({c: e for c, e in substitution.items() if c in coeff.free_coords()})
            piece = ExteriorForm.function(target, moved)
            for coord in mono:
                piece = piece.wedge(differentials[coord])
            result = result + piece
        return result

    def embed(self, target: CoordinateSpace) -> "ExteriorForm":
        if not target.contains(self.space):
            raise SpaceMismatchError(f"Space '{target.name}' does not contain '{self.space.name}'.")
        collected = {}
        for mono, coeff in self.terms.items():
            sign, new = _sort_monomial(target, mono)
            collected[new] = coeff if sign > 0 else -coeff
        return ExteriorForm(target, collected, self.degree)

    def integrate_fibre(self, coords, bounds: dict | None = None) -> "ExteriorForm":
        """Integrates out `coords`, moving their differentials to the far left first."""
        bounds = bounds or {}
        selected = set(coords)
        for coord in selected:
            self.space.index(coord)
        target = self.space.without(selected)
        collected = {}
        for mono, coeff in self.terms.items():
            if not selected <= set(mono):
                continue
            sign, rest = _extract_left(mono, selected)
            box = {coord: bounds.get(coord, self.space.bound(coord)) for coord in coords}
            if isinstance(coeff, NumericCoeff):
                value = coeff.integrate_box(box)
            else:
                value = coeff
                for coord, (lo, hi) in box.items():
                    value = value.integrate(coord, lo, hi)
            value = value if sign > 0 else -value
            collected[rest] = collected[rest] + value if rest in collected else value
        return ExteriorForm(target, collected, self.degree - len(selected))

    def component(self, coords, count: int) -> "ExteriorForm":
        """Terms with exactly `count` differentials among `coords`."""
        chosen = set(coords)
        return ExteriorForm(
            self.space,
            {m: c for m, c in self.terms.items() if len(chosen & set(m)) == count},
            self.degree,
        )

    # -- inspection --
    def is_zero(self) -> bool:
        return all(isinstance(c, CoeffExpr) and c.is_zero() for c in self.terms.values())

    def is_zero_on(self, domain: dict) -> bool:
        return all(c.is_zero_on(domain) for c in self.terms.values())

    def equals(self, other: "ExteriorForm") -> bool:
        return (self - other).is_zero()

    def evaluate(self, point: dict) -> dict:
        return {mono: coeff.evaluate(point) for mono, coeff in self.terms.items()}

    def max_abs(self, points) -> float:
        """Largest absolute coefficient value over the given points (residual norm)."""
        worst = 0.0
        for point in points:
            for value in self.evaluate(point).values():
                worst = max(worst, abs(complex(value)))
        return worst

    def to_numeric(self, order: int = 8) -> "ExteriorForm":
        return ExteriorForm(self.space, {m: c.to_numeric(order) for m, c in self.terms.items()}, self.degree)

    def is_numeric(self) -> bool:
        return any(isinstance(c, NumericCoeff) for c in self.terms.values())

    def to_json(self) -> dict:
        return {
            "space": self.space.name,
            "coords": list(self.space.coords),
            "degree": self.degree,
            "terms": [{"coeff": c.to_json(), "wedge": list(m)} for m, c in sorted(self.terms.items())],
        }

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, coeff in sorted(self.terms.items()):
            wedge = "^".join(f"d{c}" for c in mono)
            parts.append(f"({coeff})" + (f"*{wedge}" if wedge else ""))
        return " + ".join(parts)


# --- Module-level operations ---

def wedge(a: ExteriorForm, b: ExteriorForm) -> ExteriorForm:
    return a.wedge(b)


def exterior_d(a: ExteriorForm) -> ExteriorForm:
    return a.d()


def pullback(mapping: dict, a: ExteriorForm, target: CoordinateSpace) -> ExteriorForm:
    return a.pullback(target, mapping)


def integrate_periodic(a: ExteriorForm, coords) -> ExteriorForm:
    """Integration over full periods of torus (or angular) factors."""
    for coord in coords:
        if a.space.kind(coord) not in (PERIODIC, ANGULAR):
            raise SpaceMismatchError(f"Coordinate '{coord}' is {a.space.kind(coord)}, not periodic.")
    return a.integrate_fibre(coords)


def integrate_simplex(a: ExteriorForm, p: int) -> ExteriorForm:
    """Integration over the simplex factor Delta^p; terms of barycentric degree other than p drop out."""
    coords = simplex_space(p).coords
    if not coords:
        return a
    result = {}
    selected = set(coords)
    target = a.space.without(selected)
    for mono, coeff in a.terms.items():
        if not selected <= set(mono):
            continue
        sign, rest = _extract_left(mono, selected)
        value = coeff.integrate_simplex(coords)
        value = value if sign > 0 else -value
        result[rest] = result[rest] + value if rest in result else value
    return ExteriorForm(target, result, a.degree - p)


def sample_points(space: CoordinateSpace, count: int = 3) -> list:
    return [space.sample_point(offset) for offset in range(count)]


def log_form(label: str, form: ExteriorForm):
    logging.info(f"{label}: degree {form.degree}, {len(form.terms)} terms on '{form.space.name}'")


def factorial(n: int) -> int:
    return math.factorial(n)
