import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyvem.quadrature import (
    edge_lobatto_points,
    edge_rule,
    fan_point,
    gauss_legendre_01,
    lagrange_matrix,
    lobatto_01,
    map_triangle_rule,
    polygon_area,
    polygon_centroid,
    polygon_rule,
    triangle_rule,
)

from conftest import random_convex_polygon, regular_polygon


def ref_triangle_monomial(a, b):
    # int_T x^a y^b over the reference triangle
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def polygon_monomial(poly, a, b):
    """int x^a y^b over a polygon by the divergence theorem with exact edge Gauss rules."""
    total = 0.0
    s, w = gauss_legendre_01(a + b + 2)
    for p, q in zip(poly, np.roll(poly, -1, 0)):
        pts = p + s[:, None] * (q - p)
        # int_E x^a y^b = oint x^(a+1) y^b / (a+1) n_x ds
        total += (w * pts[:, 0] ** (a + 1) * pts[:, 1] ** b).sum() / (a + 1) * (q[1] - p[1])
    return total


@pytest.mark.parametrize("degree", range(1, 21))
def test_triangle_rule_monomial_sweep(degree):
    rule = triangle_rule(degree)
    assert np.all(rule.weights > 0)
    for d in range(degree + 1):
        for b in range(d + 1):
            a = d - b
            exact = ref_triangle_monomial(a, b)
            got = rule.integrate(rule.points[:, 0] ** a * rule.points[:, 1] ** b)
            assert abs(got - exact) <= 1e-12 * exact


def test_triangle_rule_low_orders():
    r1 = triangle_rule(1)
    assert r1.weights.tolist() == [0.5]
    np.testing.assert_allclose(r1.points, [[1 / 3, 1 / 3]])
    r2 = triangle_rule(2)
    assert len(r2.weights) == 3


def test_triangle_rule_rejects_bad_degree():
    with pytest.raises(ValueError):
        triangle_rule(0)
    with pytest.raises(ValueError):
        triangle_rule(21)


def test_mapped_triangle_affine_invariance():
    tri = np.array([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]])
    r = map_triangle_rule(tri, 6)
    area = 0.5 * abs(np.linalg.det(np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])))
    assert math.isclose(r.weights.sum(), area, rel_tol=1e-14)
    # int x^2 y against the divergence-theorem oracle
    got = r.integrate(r.points[:, 0] ** 2 * r.points[:, 1])
    assert math.isclose(got, polygon_monomial(tri, 2, 1), rel_tol=1e-12)


def test_unit_square_values():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert math.isclose(polygon_rule(sq, 0).weights.sum(), 1.0, rel_tol=1e-14)
    r = polygon_rule(sq, 3)
    assert math.isclose(r.integrate(r.points[:, 0] ** 2 * r.points[:, 1]), 1 / 6, rel_tol=1e-13)


def test_regular_hexagon_area():
    hexagon = regular_polygon(6, radius=0.5)
    exact = 3 * math.sqrt(3) / 2 * 0.25
    assert math.isclose(polygon_rule(hexagon, 1).weights.sum(), exact, rel_tol=1e-14)
    assert math.isclose(polygon_area(hexagon), exact, rel_tol=1e-14)


def test_centroid_of_shifted_square():
    sq = np.array([[1, 2], [3, 2], [3, 4], [1, 4]], dtype=float)
    np.testing.assert_allclose(polygon_centroid(sq), [2, 3])


def test_fan_point_nonconvex_fallback():
    # L-shape: centroid may fail, a kernel point must still be found
    poly = np.array([[0, 0], [2, 0], [2, 0.2], [0.2, 0.2], [0.2, 2], [0, 2]], dtype=float)
    p = fan_point(poly)
    r = polygon_rule(poly, 4)
    assert math.isclose(r.weights.sum(), polygon_area(poly), rel_tol=1e-13)
    assert np.all(r.weights > 0)
    assert math.isclose(r.integrate(r.points[:, 0] * r.points[:, 1] ** 3), polygon_monomial(poly, 1, 3), rel_tol=1e-12)
    assert p.shape == (2,)


def test_fan_point_fails_without_kernel():
    # a "U" shape has an empty kernel
    poly = np.array([[0, 0], [3, 0], [3, 2], [2, 2], [2, 0.5], [1, 0.5], [1, 2], [0, 2]], dtype=float)
    with pytest.raises(ValueError):
        fan_point(poly)


def test_edge_rules():
    r = edge_rule([0, 0], [1, 0], 1)
    assert len(r.weights) == 1 and r.weights[0] == 1.0
    np.testing.assert_allclose(r.points, [[0.5, 0.0]])
    r3 = edge_rule([0, 0], [1, 0], 3)
    assert math.isclose(r3.integrate(r3.points[:, 0] ** 3), 0.25, rel_tol=1e-14)
    r = edge_rule([1, 1], [4, 5], 7)
    assert math.isclose(r.weights.sum(), 5.0, rel_tol=1e-14)


def test_lobatto_nodes():
    np.testing.assert_allclose(lobatto_01(1), [0, 1])
    np.testing.assert_allclose(lobatto_01(2), [0, 0.5, 1], atol=1e-15)
    np.testing.assert_allclose(lobatto_01(3), [0, 0.5 - math.sqrt(5) / 10, 0.5 + math.sqrt(5) / 10, 1], atol=1e-15)
    pts = edge_lobatto_points([0, 0], [2, 2], 2)
    np.testing.assert_allclose(pts, [[0, 0], [1, 1], [2, 2]], atol=1e-15)
    with pytest.raises(ValueError):
        lobatto_01(0)


def test_lagrange_matrix_is_cardinal():
    nodes = lobatto_01(4)
    np.testing.assert_allclose(lagrange_matrix(nodes, nodes), np.eye(5), atol=1e-14)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(lagrange_matrix(nodes, x).sum(axis=1), 1.0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), degree=st.integers(1, 10))
def test_polygon_rule_exact_on_random_convex_polygons(seed, degree):
    poly = random_convex_polygon(np.random.default_rng(seed))
    r = polygon_rule(poly, degree)
    for d in range(degree + 1):
        for b in range(d + 1):
            a = d - b
            exact = polygon_monomial(poly, a, b)
            got = r.integrate(r.points[:, 0] ** a * r.points[:, 1] ** b)
            scale = r.integrate(np.abs(r.points[:, 0] ** a * r.points[:, 1] ** b))
            assert abs(got - exact) <= 1e-12 * max(scale, 1e-300)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    poly = random_convex_polygon(rng)
    A = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    if np.linalg.det(A) <= 0.1:
        A = np.eye(2) * 1.5
    t = rng.normal(size=2)

    def f(p):
        return np.cos(p[:, 0]) * p[:, 1] ** 2

    mapped = poly @ A.T + t
    lhs = polygon_rule(mapped, 12)
    # f∘A^{-1} on A(E) against |det A| int_E f
    back = (lhs.points - t) @ np.linalg.inv(A).T
    rhs = polygon_rule(poly, 12)
    assert math.isclose(lhs.integrate(f(back)), abs(np.linalg.det(A)) * rhs.integrate(f(rhs.points)), rel_tol=1e-10, abs_tol=1e-12)
