"""What SUPG buys at eps = 1e-6.

Both runs are measured in the same SUPG-type norm. On Voronoi meshes the
unstabilised Galerkin solution is visibly polluted. On uniform squares the
smooth solution has no layers, and plain Galerkin already does well.
"""

from polyvem.harness import cached_mesh, cell_errors, sine_case
from polyvem.system import solve_problem

case = sine_case(1e-6)
for family, levels in [("voro", (64, 256)), ("quad", (8, 16))]:
    for level in levels:
        mesh = cached_mesh(family, level)
        e = {}
        for supg in (True, False):
            spec = case.spec(convection_form="orig", supg_enabled=supg)
            e[supg] = cell_errors(mesh, 1, solve_problem(mesh, 1, spec).solution, case, spec).e_c
        print(f"{family} {level:4d}: eC SUPG {e[True]:.3e}  NONE {e[False]:.3e}  ratio {e[False] / e[True]:.2f}")
