"""Quadrature on triangles, polygons and segments.

Triangle rules of degree >= 3 are collapsed (conical) Gauss products, so all
weights are positive. Polygons are integrated by a fan of triangles from a
point that sees every edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from scipy.special import roots_jacobi, roots_legendre

MAX_TRIANGLE_DEGREE = 20


@dataclass(frozen=True)
class QuadRule:
    """Points (n, 2) or (n,) and weights (n,), exact up to ``degree``."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=None)
def _triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    if degree <= 1:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5])
    if degree == 2:
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        return pts, np.full(3, 1.0 / 6.0)
    n = (degree + 2) // 2
    # Duffy collapse: x = u, y = v (1 - u); the Jacobian (1 - u) goes into Gauss-Jacobi(1, 0).
    gu, wu = roots_jacobi(n, 1.0, 0.0)
    gv, wv = roots_legendre(n)
    u = 0.5 * (gu + 1.0)
    v = 0.5 * (gv + 1.0)
    wu = wu / 4.0
    wv = wv / 2.0
    uu, vv = np.meshgrid(u, v, indexing="ij")
    pts = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    w = np.outer(wu, wv).ravel()
    return pts, w


def triangle_rule(degree: int) -> QuadRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2."""
    if not 1 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"unsupported triangle rule degree {degree}")
    pts, w = _triangle_rule(int(degree))
    return QuadRule(pts.copy(), w.copy(), int(degree))


def map_triangle_rule(tri: np.ndarray, degree: int) -> QuadRule:
    """Map the reference rule onto the triangle with vertices ``tri`` (3, 2)."""
    pts, w = _triangle_rule(max(int(degree), 1))
    a, b, c = np.asarray(tri, dtype=float)
    jac = np.column_stack([b - a, c - a])
    det = abs(np.linalg.det(jac))
    return QuadRule(a + pts @ jac.T, w * det, int(degree))


def _sees_all_edges(poly: np.ndarray, point: np.ndarray, tol: float) -> bool:
    nxt = np.roll(poly, -1, axis=0)
    cross = (nxt[:, 0] - poly[:, 0]) * (point[1] - poly[:, 1]) - (
        nxt[:, 1] - poly[:, 1]
    ) * (point[0] - poly[:, 0])
    return bool(np.all(cross > tol))


def fan_point(poly: np.ndarray, rng_seed: int = 0, n_samples: int = 2000) -> np.ndarray:
    """A point from which every edge of the CCW polygon is visible.

    Tries the area centroid first, then rejection-samples the bounding box.
    """
    poly = np.asarray(poly, dtype=float)
    scale = float(np.ptp(poly, axis=0).max())
    tol = 1e-14 * scale * scale
    c = polygon_centroid(poly)
    if _sees_all_edges(poly, c, tol):
        return c
    rng = np.random.default_rng(rng_seed)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    for p in rng.uniform(lo, hi, size=(n_samples, 2)):
        if _sees_all_edges(poly, p, tol):
            return p
    raise ValueError("no fan point sees every edge of the polygon")


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6.0 * a)


def polygon_rule(poly: np.ndarray, degree: int) -> QuadRule:
    """Fan-triangulated rule on a CCW polygon given by its vertex array (m, 2)."""
    poly = np.asarray(poly, dtype=float)
    c = fan_point(poly)
    ref_pts, ref_w = _triangle_rule(max(int(degree), 1))
    a = poly
    b = np.roll(poly, -1, axis=0)
    e1 = a - c
    e2 = b - c
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # points[t, q] = c + s_q e1_t + t_q e2_t
    pts = (
        c[None, None, :]
        + ref_pts[None, :, 0:1] * e1[:, None, :]
        + ref_pts[None, :, 1:2] * e2[:, None, :]
    )
    w = np.abs(det)[:, None] * ref_w[None, :]
    return QuadRule(pts.reshape(-1, 2), w.ravel(), int(degree))


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def lobatto_01(k: int) -> np.ndarray:
    """k + 1 Gauss-Lobatto nodes on [0, 1], endpoints included, ascending."""
    if k < 1:
        raise ValueError("Lobatto nodes need k >= 1")
    if k == 1:
        return np.array([0.0, 1.0])
    # interior nodes are the roots of P_k'
    coef = np.zeros(k + 1)
    coef[-1] = 1.0
    inner = np.sort(np.real(legendre.legroots(legendre.legder(coef))))
    return np.concatenate([[0.0], 0.5 * (inner + 1.0), [1.0]])


def edge_rule(a: np.ndarray, b: np.ndarray, degree: int) -> QuadRule:
    """Gauss rule on the segment [a, b], exact to ``degree``; weights sum to |b - a|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(1, (int(degree) + 2) // 2)
    s, w = gauss_legendre_01(n)
    length = float(np.hypot(*(b - a)))
    return QuadRule(a + s[:, None] * (b - a), w * length, int(degree))


def edge_lobatto_points(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """k + 1 Lobatto points on [a, b], from a to b."""
    s = lobatto_01(k)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a + s[:, None] * (b - a)


def lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values L[i, j] of the j-th Lagrange polynomial on ``nodes`` at x[i]."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.ones((x.size, nodes.size))
    for j, xj in enumerate(nodes):
        for m, xm in enumerate(nodes):
            if m != j:
                out[:, j] *= (x - xm) / (xj - xm)
    return out
