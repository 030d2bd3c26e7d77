import numpy as np
import pytest
import scipy.sparse as sp

from polyvem.basis import multi_indices
from polyvem.dofs import build_dof_map, interpolate_dofs
from polyvem.forms import CONVECTION_FORMS, ProblemSpec, constant_field
from polyvem.harness import default_beta, polynomial_case
from polyvem.mesh import PolyMesh, gen_quad, generate
from polyvem.projectors import element_projectors
from polyvem.system import (
    LinearSystem,
    SolverError,
    apply_dirichlet,
    assemble,
    dirichlet_values,
    scatter,
    solve,
    solve_problem,
)


def test_single_cell_global_equals_local():
    mesh = PolyMesh([[0, 0], [1, 0], [1.2, 0.8], [0.4, 1.1], [-0.1, 0.5]], [[0, 1, 2, 3, 4]])
    spec = ProblemSpec(0.3, constant_field(1, -1))
    sysm = assemble(mesh, 2, spec)
    ef = sysm.element_forms[0]
    np.testing.assert_allclose(sysm.matrix.toarray(), ef.Asupg, atol=1e-15)
    np.testing.assert_allclose(sysm.rhs, ef.Fsupg)


def test_pure_diffusion_symmetric_with_zero_row_sums():
    spec = ProblemSpec(1.0, constant_field(0, 0))
    A = assemble(gen_quad(2), 1, spec).matrix.toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-14)
    np.testing.assert_allclose(A.sum(axis=1), 0, atol=1e-14)


def test_sparsity_matches_cell_adjacency():
    mesh = generate("voro", 20, rng_seed=1)
    dm = build_dof_map(mesh, 2)
    A = assemble(mesh, 2, ProblemSpec(1e-2, default_beta)).matrix
    allowed = set()
    for d in dm.cell_dofs:
        allowed.update((int(i), int(j)) for i in d for j in d)
    coo = A.tocoo()
    assert set(zip(coo.row.tolist(), coo.col.tolist())) <= allowed


def test_scatter_quadratic_form():
    mesh = generate("rand", 25, rng_seed=4)
    sysm = assemble(mesh, 3, ProblemSpec(1e-3, default_beta, convection_form="orig"))
    v = np.random.default_rng(0).normal(size=sysm.n_global)
    total = sum(v[d] @ ef.Asupg @ v[d] for d, ef in zip(sysm.dof_map.cell_dofs, sysm.element_forms))
    assert v @ sysm.matrix @ v == pytest.approx(total, rel=1e-12)


def test_scatter_vectors():
    mesh = gen_quad(2)
    dm = build_dof_map(mesh, 1)
    A, F = scatter(dm, [np.eye(4)] * 4, [np.ones(4)] * 4)
    assert F[4] == 4 and F[0] == 1  # centre vertex belongs to all four cells
    assert A[4, 4] == 4


def test_assembly_linear_in_f():
    mesh = generate("voro", 16, rng_seed=2)
    f1 = lambda x, y: np.sin(x) * y
    f2 = lambda x, y: x * x - y
    F = lambda f: assemble(mesh, 2, ProblemSpec(1e-2, default_beta, f=f)).rhs
    np.testing.assert_allclose(F(lambda x, y: f1(x, y) + f2(x, y)), F(f1) + F(f2), atol=1e-14)


def test_identity_system():
    dm = build_dof_map(gen_quad(1), 1)
    b = np.array([1.0, -2.0, 3.0, 0.5])
    sysm = LinearSystem(sp.identity(4, format="csr"), b.copy(), dm, np.zeros(4, bool))
    np.testing.assert_allclose(solve(sysm), b)
    assert sysm.residual == 0.0


def test_one_interior_dof_hand_solve():
    mesh = gen_quad(2)
    spec = ProblemSpec(1.0, constant_field(0, 0), f=lambda x, y: np.ones_like(x))
    raw = assemble(mesh, 1, spec)
    A, F = raw.matrix.toarray(), raw.rhs.copy()
    sysm = apply_dirichlet(raw, np.zeros(raw.n_global))
    x = solve(sysm)
    # centre vertex is dof 4; all others are boundary
    assert x[4] == pytest.approx(F[4] / A[4, 4])
    np.testing.assert_array_equal(np.delete(x, 4), 0)


def test_dirichlet_elimination_structure():
    mesh = gen_quad(3)
    k = 2
    g = lambda x, y: x + 2 * y
    raw = assemble(mesh, k, ProblemSpec(1.0, constant_field(1, 0)))
    rhs0 = raw.rhs.copy()
    A0 = raw.matrix.copy()
    vals = dirichlet_values(mesh, k, g, raw.dof_map)
    sysm = apply_dirichlet(raw, vals)
    mask = sysm.dirichlet_mask
    A = sysm.matrix.toarray()
    np.testing.assert_array_equal(A[mask][:, mask], np.eye(mask.sum()))
    assert not A[mask][:, ~mask].any() and not A[~mask][:, mask].any()
    np.testing.assert_allclose(sysm.rhs[mask], vals[mask])
    np.testing.assert_allclose(sysm.rhs[~mask], (rhs0 - A0 @ vals)[~mask])
    # zero data leaves interior rows untouched
    raw = assemble(mesh, k, ProblemSpec(1.0, constant_field(1, 0)))
    rhs0 = raw.rhs.copy()
    z = apply_dirichlet(raw, np.zeros(raw.n_global))
    np.testing.assert_array_equal(z.rhs[~mask], rhs0[~mask])


def test_sine_boundary_values_vanish():
    mesh = generate("voro", 30, rng_seed=0)
    dm = build_dof_map(mesh, 3)
    vals = dirichlet_values(mesh, 3, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y), dm)
    assert np.abs(vals).max() < 1e-15


@pytest.mark.parametrize("form", CONVECTION_FORMS)
@pytest.mark.parametrize("supg", [True, False])
def test_patch_test_linear_boundary_data(form, supg):
    mesh = generate("rand", 20, rng_seed=5)
    case = polynomial_case((1, 0), 1.0, constant_field(1, 2))
    sysm = solve_problem(mesh, 2, case.spec(convection_form=form, supg_enabled=supg))
    np.testing.assert_allclose(sysm.solution, interpolate_dofs(mesh, 2, case.u), atol=1e-10)
    assert sysm.residual <= 1e-12


def test_global_consistency_identity_at_interior_rows():
    mesh = generate("voro", 20, rng_seed=3)
    k = 3
    for alpha in multi_indices(k):
        case = polynomial_case(alpha, 0.7, constant_field(1, 2))
        for form in CONVECTION_FORMS:
            sysm = assemble(mesh, k, case.spec(convection_form=form))
            p = interpolate_dofs(mesh, k, case.u)
            r = sysm.matrix @ p - sysm.rhs
            interior = ~sysm.dof_map.boundary
            assert np.abs(r[interior]).max() <= 1e-10


def test_solver_reports_failures():
    dm = build_dof_map(gen_quad(1), 1)
    singular = sp.csr_matrix(np.diag([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(SolverError):
        solve(LinearSystem(singular, np.ones(4), dm, np.zeros(4, bool)))
    rng = np.random.default_rng(0)
    A = sp.csr_matrix(rng.normal(size=(4, 4)) @ np.diag([1, 1e-6, 1e-9, 1]))
    with pytest.raises(SolverError) as info:
        solve(LinearSystem(A, rng.normal(size=4), dm, np.zeros(4, bool)), tol=1e-30)
    assert info.value.residual > 0
