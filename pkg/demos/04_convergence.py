"""Convergence of the SUPG scheme on the manufactured sine solution.

u = sin(pi x) sin(pi y) with a rotating, divergence-free transport field.
In the diffusion-dominated regime the H1 error drops like h^k; when convection
dominates, the SUPG-type error drops like h^(k + 1/2).
"""

from polyvem.harness import StudyConfig, rows_to_csv, run_convergence

for eps in (1e-1, 1e-6):
    for k in (1, 2):
        res = run_convergence(StudyConfig("quad", (8, 16, 32), k, eps, "bounSkew"))
        print(f"eps={eps:g} k={k}: rate eH1 {res.rate('e_h1'):.2f}, rate eC {res.rate('e_c'):.2f}")
        print(rows_to_csv(res.rows))
