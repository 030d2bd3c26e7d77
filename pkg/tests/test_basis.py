import math

import numpy as np
import pytest

from polyvem.basis import (
    ScaledMonomialBasis,
    derivative_matrices,
    dim_poly,
    index_of,
    laplacian_matrix,
    multi_indices,
)
from polyvem.mesh import generate
from polyvem.quadrature import polygon_rule


def test_dimensions_and_ordering():
    assert [dim_poly(n) for n in range(-1, 5)] == [0, 1, 3, 6, 10, 15]
    assert multi_indices(2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    for n in range(6):
        for i, a in enumerate(multi_indices(n)):
            assert index_of(a) == i
    # prefix property
    assert multi_indices(4)[: dim_poly(2)] == multi_indices(2)


def test_eval_examples():
    b = ScaledMonomialBasis(np.array([0.5, 0.5]), 2.0, 3)
    c, h = b.center, b.h
    assert b.eval(np.array([[0.3, 0.9]]))[0, 0] == 1.0
    assert b.eval(c + [h, 0.0])[0, index_of((1, 0))] == pytest.approx(1.0)
    assert b.eval(c + [h / 2, h / 2])[0, index_of((2, 1))] == pytest.approx(1 / 8)


def test_derivative_examples():
    b = ScaledMonomialBasis(np.array([0.1, -0.2]), 0.7, 2)
    p = np.array([[0.3, 0.4], [-1.0, 2.0]])
    gx, gy = b.eval_grad(p)
    np.testing.assert_array_equal(gx[:, 0], 0.0)
    np.testing.assert_array_equal(gy[:, 0], 0.0)
    np.testing.assert_allclose(gx[:, index_of((1, 0))], 1 / 0.7)
    np.testing.assert_allclose(b.eval_lapl(p)[:, index_of((2, 0))], 2 / 0.49)


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(0)
    b = ScaledMonomialBasis(rng.normal(size=2), 0.8, 4)
    p = rng.normal(size=(10, 2))
    gx, gy = b.eval_grad(p)
    d = 1e-6
    fx = (b.eval(p + [d, 0]) - b.eval(p - [d, 0])) / (2 * d)
    fy = (b.eval(p + [0, d]) - b.eval(p - [0, d])) / (2 * d)
    np.testing.assert_allclose(gx, fx, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(gy, fy, rtol=1e-6, atol=1e-6)


def test_laplacian_matrix_consistent():
    dx, dy = derivative_matrices(3)
    np.testing.assert_array_equal(laplacian_matrix(3), dx @ dx + dy @ dy)


def test_mass_matrix_examples():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    rule = polygon_rule(sq, 4)
    H0 = ScaledMonomialBasis(np.array([0.5, 0.5]), math.sqrt(2), 0).mass_matrix(rule)
    np.testing.assert_allclose(H0, [[1.0]], atol=1e-15)
    H1 = ScaledMonomialBasis(np.array([0.5, 0.5]), math.sqrt(2), 1).mass_matrix(rule)
    assert H1[1, 1] == pytest.approx(1 / 12 / 2)
    assert H1[2, 2] == pytest.approx(1 / 12 / 2)
    np.testing.assert_allclose(H1, np.diag([1.0, 1 / 24, 1 / 24]), atol=1e-15)


SLIVER_CONDITIONING = pytest.mark.xfail(
    strict=True, reason="scaled monomials on thin cells: measured cond(H) 1.1e8 (tria 8) and 2.7e9 (rand 64) at degree 4"
)


@pytest.mark.parametrize(
    "family,level",
    [("quad", 8), pytest.param("tria", 8, marks=SLIVER_CONDITIONING), ("voro", 64), pytest.param("rand", 64, marks=SLIVER_CONDITIONING)],
)
def test_mass_matrix_conditioning(family, level):
    mesh = generate(family, level)
    for c in range(mesh.n_cells):
        rule = polygon_rule(mesh.cell_coords(c), 8)
        H = ScaledMonomialBasis(mesh.centroids[c], mesh.diameters[c], 4).mass_matrix(rule)
        lam = np.linalg.eigvalsh(H)
        assert lam[0] > 0
        assert lam[-1] / lam[0] <= 1e8


@pytest.mark.parametrize("family,level", [("quad", 8), ("tria", 8), ("voro", 64), ("rand", 64)])
def test_mass_matrix_positive_definite_up_to_degree_3(family, level):
    mesh = generate(family, level)
    for c in range(mesh.n_cells):
        rule = polygon_rule(mesh.cell_coords(c), 6)
        H = ScaledMonomialBasis(mesh.centroids[c], mesh.diameters[c], 3).mass_matrix(rule)
        lam = np.linalg.eigvalsh(H)
        assert lam[0] > 0 and lam[-1] / lam[0] <= 1e8
