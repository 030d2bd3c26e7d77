"""Computable polynomial projections of the enhanced virtual element space.

For one polygon and order k this builds, as dense matrices acting on local DoF
vectors:

* ``pi_nabla_star`` - coefficients of the H1-seminorm projection onto P_k,
* ``pi0_k`` - coefficients of the L2 projection onto P_k (enhancement moments),
* ``pi0_grad[n]`` - coefficients of the L2 projection of the gradient onto
  [P_n]^2, n in {k - 1, k}, stacked x-block over y-block.

Coefficients always refer to the cell's scaled monomial basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .basis import ScaledMonomialBasis, derivative_matrices, dim_poly, laplacian_matrix
from .dofs import LocalDofLayout, local_point_dofs
from .quadrature import gauss_legendre_01, lagrange_matrix, lobatto_01, polygon_area, polygon_centroid, polygon_rule


@dataclass
class ElementProjectors:
    k: int
    coords: np.ndarray
    area: float
    centroid: np.ndarray
    h: float
    layout: LocalDofLayout
    basis: ScaledMonomialBasis
    # volume quadrature and basis values there
    qp: np.ndarray
    qw: np.ndarray
    V: np.ndarray
    Vx: np.ndarray
    Vy: np.ndarray
    # boundary quadrature: points, weights, outward normals, trace matrix, basis values
    bp: np.ndarray
    bw: np.ndarray
    bn: np.ndarray
    T: np.ndarray
    Vb: np.ndarray
    perimeter: float
    # auxiliary matrices
    H: np.ndarray
    G: np.ndarray
    B: np.ndarray
    D: np.ndarray
    moments: np.ndarray
    pi_nabla_star: np.ndarray
    pi_nabla_dof: np.ndarray
    pi0_k: np.ndarray
    pi0_grad: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.layout.n_dofs

    def grad_mass(self, n: int) -> np.ndarray:
        """Block mass matrix of [P_n]^2 in the (x-block, y-block) basis."""
        d = dim_poly(n)
        hn = self.H[:d, :d]
        return sla.block_diag(hn, hn)

    def grad_at_quad(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Values of the x and y components of Pi0_n grad v at volume points (nq x N)."""
        d = dim_poly(n)
        p = self.pi0_grad[n]
        return self.V[:, :d] @ p[:d], self.V[:, :d] @ p[d:]

    def div_grad_at_quad(self, n: int) -> np.ndarray:
        """div Pi0_n grad v at volume points (nq x N)."""
        d = dim_poly(n)
        p = self.pi0_grad[n]
        return self.Vx[:, :d] @ p[:d] + self.Vy[:, :d] @ p[d:]

    def inverse_constant(self) -> float:
        """gamma_E: smallest g with ||div p||^2 <= g h^-2 ||p||^2 on [P_{k-1}]^2."""
        d = dim_poly(self.k - 1)
        if self.k == 1:
            return 0.0
        w = self.qw[:, None]
        vx, vy = self.Vx[:, :d], self.Vy[:, :d]
        dv = np.hstack([vx, vy])
        K = (dv * w).T @ dv
        M = self.grad_mass(self.k - 1)
        lam = sla.eigh(K, M, eigvals_only=True)
        return float(max(lam[-1], 0.0) * self.h**2)


def _boundary_quadrature(coords: np.ndarray, k: int, layout: LocalDofLayout, n_gauss: int):
    m = len(coords)
    s, w = gauss_legendre_01(n_gauss)
    L = lagrange_matrix(lobatto_01(k), s)
    nxt = np.roll(coords, -1, axis=0)
    t = nxt - coords
    lengths = np.hypot(t[:, 0], t[:, 1])
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
    pts = (coords[:, None, :] + s[None, :, None] * t[:, None, :]).reshape(-1, 2)
    wts = (lengths[:, None] * w[None, :]).ravel()
    nrm = np.repeat(normals, n_gauss, axis=0)
    T = np.zeros((m * n_gauss, layout.n_dofs))
    for j in range(m):
        T[j * n_gauss : (j + 1) * n_gauss, layout.edge_dofs(j)] = L
    return pts, wts, nrm, T, float(lengths.sum())


def element_projectors(coords, k: int, quad_degree: int | None = None) -> ElementProjectors:
    """All projector matrices of the CCW polygon ``coords`` for order k.

    The work is done on the copy of the cell translated to its centroid and
    scaled to unit diameter; the scaled monomial coefficients of the projectors
    are invariant under that map, only derivatives pick up 1/h.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    coords = np.asarray(coords, dtype=float)
    m = len(coords)
    layout = LocalDofLayout(k, m)
    N = layout.n_dofs
    centroid = polygon_centroid(coords)
    diff = coords[:, None, :] - coords[None, :, :]
    h = float(np.sqrt((diff**2).sum(-1).max()))
    loc = (coords - centroid) / h
    area_hat = polygon_area(loc)
    ref = ScaledMonomialBasis(np.zeros(2), 1.0, k)
    dk, dk2 = dim_poly(k), dim_poly(k - 2)

    deg = quad_degree if quad_degree is not None else 2 * k + 2
    rule = polygon_rule(loc, deg)
    V = ref.eval(rule.points)
    Vx, Vy = ref.eval_grad(rule.points)
    bp, bw, bn, T, perimeter = _boundary_quadrature(loc, k, layout, (deg + 2) // 2)
    Vb = ref.eval(bp)
    Vbx, Vby = ref.eval_grad(bp)

    H = (V * rule.weights[:, None]).T @ V

    # D[i, a] = dof_i(m_a)
    D = np.empty((N, dk))
    D[: layout.internal_start] = ref.eval(local_point_dofs(loc, k))
    D[layout.internal_start :] = H[:dk2, :] / area_hat

    # H1 projection: G x = B with the constant row replaced by the boundary mean
    B = np.zeros((dk, N))
    dn = Vbx * bn[:, 0:1] + Vby * bn[:, 1:2]
    B[:] = (dn * bw[:, None]).T @ T
    if dk2:
        B[:, layout.internal_start :] -= area_hat * laplacian_matrix(k)[:, :dk2]
    B[0] = (bw @ T) / perimeter
    # G = B D is the Gram matrix built consistently with B
    G = B @ D
    pi_nabla_star = _refined_solve(G, B)
    pi_nabla_dof = D @ pi_nabla_star

    # moments int v m_a for all a in P_k: D_V3 below degree k-1, enhancement above
    moments = H @ pi_nabla_star
    if dk2:
        moments[:dk2] = 0.0
        moments[:dk2, layout.internal_start :] = area_hat * np.eye(dk2)
    # Pi0 v = Pi_nabla v + Pi0 (v - Pi_nabla v); the correction vanishes on P_k
    pi0_k = pi_nabla_star + sla.cho_solve(sla.cho_factor(H), moments - H @ pi_nabla_star)
    pi0_grad = {n: _pi0_grad(k, n, H, moments, pi_nabla_star, D, Vb, bw, bn, T) / h for n in (k - 1, k)}

    # back to physical scale
    return ElementProjectors(
        k=k, coords=coords, area=area_hat * h * h, centroid=centroid, h=h, layout=layout,
        basis=ScaledMonomialBasis(centroid, h, k),
        qp=centroid + h * rule.points, qw=rule.weights * h * h, V=V, Vx=Vx / h, Vy=Vy / h,
        bp=centroid + h * bp, bw=bw * h, bn=bn, T=T, Vb=Vb, perimeter=perimeter * h,
        H=H * h * h, G=G, B=B, D=D, moments=moments * h * h, pi_nabla_star=pi_nabla_star,
        pi_nabla_dof=pi_nabla_dof, pi0_k=pi0_k, pi0_grad=pi0_grad,
    )


def _refined_solve(A: np.ndarray, rhs: np.ndarray, steps: int = 2) -> np.ndarray:
    """LU solve plus iterative refinement with residuals in extended precision."""
    lu = sla.lu_factor(A)
    x = sla.lu_solve(lu, rhs)
    a_ext = A.astype(np.longdouble)
    r_ext = rhs.astype(np.longdouble)
    for _ in range(steps):
        res = (r_ext - a_ext @ x.astype(np.longdouble)).astype(float)
        x = x + sla.lu_solve(lu, res)
    return x


def _pi0_grad(k, n, H, moments, pi_nabla_star, D, Vb, bw, bn, T) -> np.ndarray:
    """L2 projection of grad v onto [P_n]^2, in the unit-diameter frame.

    Written as grad Pi_nabla v + Pi0 grad w with w = v - Pi_nabla v, and
    int grad w . q = -int w div q + int_dE w q.n for the vector monomials q.
    The right-hand side then vanishes identically on P_k.
    """
    d = dim_poly(n)
    dx, dy = derivative_matrices(k)
    w_trace = T - (T @ D) @ pi_nabla_star
    w_moments = moments - H @ pi_nabla_star
    wb = bw[:, None]
    rx = (Vb[:, :d] * bn[:, 0:1] * wb).T @ w_trace - dx[:d] @ w_moments
    ry = (Vb[:, :d] * bn[:, 1:2] * wb).T @ w_trace - dy[:d] @ w_moments
    cf = sla.cho_factor(H[:d, :d])
    gx = dx.T[:d] @ pi_nabla_star
    gy = dy.T[:d] @ pi_nabla_star
    return np.vstack([gx + sla.cho_solve(cf, rx), gy + sla.cho_solve(cf, ry)])


def grad_coefficients(k: int, n: int, h: float) -> np.ndarray:
    """Coefficients in [P_n]^2 of grad m_a for every a in P_k (column a)."""
    dx, dy = derivative_matrices(k)
    d = dim_poly(n)
    return np.vstack([dx.T[:d], dy.T[:d]]) / h


def mesh_projectors(mesh, k: int, quad_degree: int | None = None) -> list[ElementProjectors]:
    """Projectors of every cell, cached on the mesh object per (k, quad_degree)."""
    cache = mesh.__dict__.setdefault("_projector_cache", {})
    key = (k, quad_degree)
    if key not in cache:
        cache[key] = [element_projectors(mesh.cell_coords(c), k, quad_degree) for c in range(mesh.n_cells)]
    return cache[key]
