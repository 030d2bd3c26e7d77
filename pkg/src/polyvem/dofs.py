"""Degrees of freedom of the enhanced order-k space and their global numbering.

Local order on a cell with m vertices: the m vertex values, then (k - 1)
Lobatto-point values per edge in the cell's CCW traversal order, then the
k(k - 1)/2 scaled moments (1/|E|) int_E v m_a, a in P_{k-2}.

Global order: vertex DoFs, edge DoFs by edge index (points ordered from the
lower to the higher vertex index), internal moments by cell then multi-index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ScaledMonomialBasis, dim_poly
from .mesh import PolyMesh
from .quadrature import lobatto_01, polygon_rule


@dataclass(frozen=True)
class LocalDofLayout:
    k: int
    n_vertices: int

    @property
    def n_vertex_dofs(self) -> int:
        return self.n_vertices

    @property
    def n_edge_dofs(self) -> int:
        return (self.k - 1) * self.n_vertices

    @property
    def n_internal_dofs(self) -> int:
        return dim_poly(self.k - 2)

    @property
    def n_dofs(self) -> int:
        return self.n_vertices * self.k + self.n_internal_dofs

    @property
    def internal_start(self) -> int:
        return self.n_vertices * self.k

    def edge_dofs(self, j: int) -> np.ndarray:
        """Local indices along edge j: start vertex, interior points, end vertex."""
        m, k = self.n_vertices, self.k
        inner = m + j * (k - 1) + np.arange(k - 1)
        return np.concatenate([[j], inner, [(j + 1) % m]]).astype(np.int64)


def local_point_dofs(coords: np.ndarray, k: int) -> np.ndarray:
    """Coordinates of the vertex and edge DoFs of a cell, in local order."""
    m = len(coords)
    s = lobatto_01(k)[1:-1]
    nxt = np.roll(coords, -1, axis=0)
    edge_pts = coords[:, None, :] + s[None, :, None] * (nxt - coords)[:, None, :]
    return np.vstack([coords, edge_pts.reshape(-1, 2)]) if k > 1 else coords.copy()


@dataclass(frozen=True)
class DofMap:
    k: int
    n_global: int
    cell_dofs: tuple[np.ndarray, ...]
    boundary: np.ndarray
    n_point_dofs: int

    def layout(self, mesh: PolyMesh, c: int) -> LocalDofLayout:
        return LocalDofLayout(self.k, len(mesh.cells[c]))


def build_dof_map(mesh: PolyMesh, k: int) -> DofMap:
    if k < 1:
        raise ValueError("k must be >= 1")
    nv, ne = mesh.n_vertices, mesh.n_edges
    n_int = dim_poly(k - 2)
    edge_base = nv
    int_base = nv + (k - 1) * ne
    n_global = int_base + n_int * mesh.n_cells
    cell_dofs = []
    for c, loop in enumerate(mesh.cells):
        m = loop.size
        parts = [loop]
        if k > 1:
            ids = mesh.cell_edges[c]
            sgn = mesh.cell_edge_sign[c]
            r = np.arange(k - 1)
            for j in range(m):
                rr = r if sgn[j] > 0 else r[::-1]
                parts.append(edge_base + ids[j] * (k - 1) + rr)
        parts.append(int_base + c * n_int + np.arange(n_int))
        arr = np.concatenate(parts).astype(np.int64)
        arr.flags.writeable = False
        cell_dofs.append(arr)
    boundary = np.zeros(n_global, dtype=bool)
    boundary[:nv] = mesh.boundary_vertices
    if k > 1:
        for e in np.flatnonzero(mesh.boundary_edges):
            boundary[edge_base + e * (k - 1) : edge_base + (e + 1) * (k - 1)] = True
    boundary.flags.writeable = False
    return DofMap(k, n_global, tuple(cell_dofs), boundary, int_base)


def global_point_dofs(mesh: PolyMesh, k: int) -> np.ndarray:
    """Coordinates of all vertex and edge DoFs in global order."""
    pts = [np.asarray(mesh.vertices)]
    if k > 1:
        s = lobatto_01(k)[1:-1]
        a = mesh.vertices[mesh.edges[:, 0]]
        b = mesh.vertices[mesh.edges[:, 1]]
        pts.append((a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2))
    return np.vstack(pts)


def interpolate_dofs(mesh: PolyMesh, k: int, f, dof_map: DofMap | None = None, degree: int | None = None) -> np.ndarray:
    """DoF vector of the interpolant of ``f(x, y)`` (vectorised over arrays)."""
    dm = dof_map or build_dof_map(mesh, k)
    out = np.empty(dm.n_global)
    pts = global_point_dofs(mesh, k)
    out[: dm.n_point_dofs] = f(pts[:, 0], pts[:, 1])
    n_int = dim_poly(k - 2)
    if n_int:
        deg = degree if degree is not None else 2 * k + 2
        for c in range(mesh.n_cells):
            rule = polygon_rule(mesh.cell_coords(c), deg)
            basis = ScaledMonomialBasis(mesh.centroids[c], mesh.diameters[c], k - 2)
            vals = f(rule.points[:, 0], rule.points[:, 1]) * rule.weights
            out[dm.cell_dofs[c][-n_int:]] = basis.eval(rule.points).T @ vals / mesh.areas[c]
    return out
