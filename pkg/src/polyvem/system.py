"""Global assembly, Dirichlet elimination and the sparse solve."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dofs import DofMap, build_dof_map, global_point_dofs, interpolate_dofs
from .forms import ElementForms, ProblemSpec, element_supg
from .mesh import PolyMesh
from .projectors import mesh_projectors


class SolverError(RuntimeError):
    """The linear solve failed or missed its residual target."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    element_forms: list[ElementForms] = field(default_factory=list)
    solution: np.ndarray | None = None
    residual: float = float("nan")
    assemble_seconds: float = 0.0
    solve_seconds: float = 0.0

    @property
    def n_global(self) -> int:
        return self.dof_map.n_global


def scatter(dof_map: DofMap, local_mats, local_vecs=None):
    """Sum element matrices (and vectors) into a CSR matrix (and dense vector)."""
    n = dof_map.n_global
    rows, cols, vals = [], [], []
    for d, M in zip(dof_map.cell_dofs, local_mats):
        rows.append(np.repeat(d, d.size))
        cols.append(np.tile(d, d.size))
        vals.append(np.asarray(M).ravel())
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    if local_vecs is None:
        return A
    F = np.zeros(n)
    for d, v in zip(dof_map.cell_dofs, local_vecs):
        np.add.at(F, d, v)
    return A, F


def assemble(mesh: PolyMesh, k: int, spec: ProblemSpec) -> LinearSystem:
    """Global matrix and load of the SUPG problem, before boundary conditions."""
    t0 = time.perf_counter()
    dm = build_dof_map(mesh, k)
    els = mesh_projectors(mesh, k)
    forms = [element_supg(el, spec) for el in els]
    A, F = scatter(dm, [f.Asupg for f in forms], [f.Fsupg for f in forms])
    system = LinearSystem(A, F, dm, dm.boundary.copy(), np.zeros(dm.n_global), forms)
    system.assemble_seconds = time.perf_counter() - t0
    return system


def dirichlet_values(mesh: PolyMesh, k: int, g, dof_map: DofMap) -> np.ndarray:
    """Nodal values of g at every boundary point DoF (zero elsewhere)."""
    out = np.zeros(dof_map.n_global)
    pts = global_point_dofs(mesh, k)
    idx = np.flatnonzero(dof_map.boundary)
    out[idx] = np.broadcast_to(np.asarray(g(pts[idx, 0], pts[idx, 1]), dtype=float), idx.shape)
    return out


def apply_dirichlet(system: LinearSystem, values: np.ndarray) -> LinearSystem:
    """Eliminate boundary DoFs: move known values to the rhs, identity rows and columns."""
    mask = system.dirichlet_mask
    A = system.matrix.tocsr()
    lift = np.where(mask, values, 0.0)
    rhs = system.rhs - A @ lift
    rhs[mask] = values[mask]
    keep = sp.diags((~mask).astype(float))
    A = (keep @ A @ keep + sp.diags(mask.astype(float))).tocsr()
    A.eliminate_zeros()
    system.matrix = A
    system.rhs = rhs
    system.dirichlet_values = np.where(mask, values, 0.0)
    return system


def solve(system: LinearSystem, tol: float = 1e-12, refine_steps: int = 3) -> np.ndarray:
    """Sparse LU with a few steps of iterative refinement.

    Raises SolverError when the relative residual stays above ``tol``.
    """
    t0 = time.perf_counter()
    A = system.matrix.tocsc()
    b = system.rhs
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        x = np.zeros_like(b)
        res = 0.0
    else:
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
        x = lu.solve(b)
        res = np.linalg.norm(b - A @ x) / bnorm
        for _ in range(refine_steps):
            if not np.isfinite(res) or res <= 0.1 * tol:
                break
            x = x + lu.solve(b - A @ x)
            res = np.linalg.norm(b - A @ x) / bnorm
    system.solve_seconds = time.perf_counter() - t0
    system.residual = float(res)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"relative residual {res:.3e} above tolerance {tol:.1e}", float(res))
    system.solution = x
    return x


def solve_problem(mesh: PolyMesh, k: int, spec: ProblemSpec, tol: float = 1e-12) -> LinearSystem:
    """Assemble, impose u = spec.dirichlet on the boundary and solve."""
    system = assemble(mesh, k, spec)
    apply_dirichlet(system, dirichlet_values(mesh, k, spec.dirichlet, system.dof_map))
    solve(system, tol)
    return system

