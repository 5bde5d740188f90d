"""Gauss-Legendre rules on intervals, boxes and simplices (Duffy collapse)."""

import itertools
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=None)
def _unit_rule(order: int) -> tuple:
    points, weights = leggauss(order)
    # Map from [-1, 1] to [0, 1]
    return (points + 1.0) / 2.0, weights / 2.0


def gauss_legendre(order: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights of the `order`-point rule on [a, b]."""
    if order < 1:
        raise ValueError(f"Quadrature order must be positive, got {order}")
    points, weights = _unit_rule(order)
    return a + (b - a) * points, (b - a) * weights


def tensor_rule(order: int, intervals) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on a box given as a list of (a, b) intervals."""
    rules = [gauss_legendre(order, a, b) for a, b in intervals]
    points = np.array(list(itertools.product(*(r[0] for r in rules))))
    weights = np.array([math.prod(w) for w in itertools.product(*(r[1] for r in rules))])
    return points, weights


@lru_cache(maxsize=None)
def duffy_simplex_rule(p: int, order: int) -> tuple:
    """
    Rule on {t_i >= 0, sum t_i <= 1} in p free coordinates, built by collapsing the unit cube:
    t_1 = u_1, t_k = u_k * prod_{i<k} (1 - u_i).
    """
    if p == 0:
        return np.zeros((1, 0)), np.ones(1)
    cube = [_unit_rule(order + (p - 1 - k)) for k in range(p)]
    nodes, weights = [], []
    for combo in itertools.product(*(zip(*rule) for rule in cube)):
        u = [c[0] for c in combo]
        w = math.prod(c[1] for c in combo)
        t, remaining = [], 1.0
        for k, uk in enumerate(u):
            t.append(uk * remaining)
            w *= remaining if k > 0 else 1.0
            remaining *= 1.0 - uk
        nodes.append(t)
        weights.append(w)
    return np.array(nodes), np.array(weights)


def compensated_sum(values) -> float:
    """Neumaier summation, used for every numeric integral accumulation."""
    total = 0.0
    correction = 0.0
    for value in values:
        value = float(value)
        t = total + value
        if abs(total) >= abs(value):
            correction += (total - t) + value
        else:
            correction += (value - t) + total
        total = t
    return total + correction
