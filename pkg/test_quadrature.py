import math

import numpy as np
import pytest

from core.quadrature import compensated_sum, duffy_simplex_rule, gauss_legendre, tensor_rule


@pytest.mark.parametrize("order", range(1, 7))
def test_gauss_legendre_exact_up_to_degree_2n_minus_1(order):
    points, weights = gauss_legendre(order, 0.0, 2.0)
    degree = 2 * order - 1
    assert np.dot(weights, points ** degree) == pytest.approx(2.0 ** (degree + 1) / (degree + 1), rel=1e-12)


def test_gauss_legendre_rejects_nonpositive_order():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_tensor_rule_on_a_box():
    points, weights = tensor_rule(3, [(0.0, 1.0), (0.0, 2.0)])
    assert points.shape == (9, 2)
    assert np.dot(weights, points[:, 0] * points[:, 1]) == pytest.approx(1.0)


@pytest.mark.parametrize("p", range(1, 5))
def test_duffy_weights_sum_to_simplex_volume(p):
    _, weights = duffy_simplex_rule(p, 4)
    assert weights.sum() == pytest.approx(1.0 / math.factorial(p), rel=1e-12)


def test_duffy_rule_integrates_linear_function():
    nodes, weights = duffy_simplex_rule(2, 4)
    assert np.dot(weights, nodes[:, 0]) == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert np.all(nodes.sum(axis=1) <= 1.0 + 1e-12)


def test_duffy_rule_on_a_point():
    nodes, weights = duffy_simplex_rule(0, 5)
    assert nodes.shape == (1, 0)
    assert list(weights) == [1.0]


def test_compensated_sum_recovers_cancelled_term():
    assert compensated_sum([1e16, 1.0, -1e16]) == 1.0
    assert sum([1e16, 1.0, -1e16]) == 0.0
