"""Polynomial projections computed from degrees of freedom alone.

On one polygon we build the H1 projection, the L2 projection (available thanks
to the enhanced space) and the L2 projection of the gradient, then check that
each one reproduces the scaled monomials.
"""

import numpy as np

from polyvem.basis import dim_poly
from polyvem.projectors import element_projectors, grad_coefficients

hexagon = np.array([[0.0, 0.0], [1.0, -0.2], [1.6, 0.5], [1.3, 1.4], [0.4, 1.5], [-0.3, 0.7]])

for k in (1, 2, 3):
    el = element_projectors(hexagon, k)
    I = np.eye(dim_poly(k))
    print(f"k={k}: {el.n_dofs} DoFs, dim P_k = {dim_poly(k)}")
    print("   |Pi_nabla D - I| =", f"{np.abs(el.pi_nabla_star @ el.D - I).max():.1e}")
    print("   |Pi0 D - I|      =", f"{np.abs(el.pi0_k @ el.D - I).max():.1e}")
    for n in (k - 1, k):
        err = np.abs(el.h * el.pi0_grad[n] @ el.D - grad_coefficients(k, n, 1.0)).max()
        print(f"   |Pi0_{n} grad D - grad| = {err:.1e}")

# The lowest-order square: Pi_nabla of the first hat function, by hand.
square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
el = element_projectors(square, 1)
print("Pi_nabla as a DoF matrix on the unit square:\n", np.round(el.pi_nabla_dof, 3))
print("mean gradient of the hat at (0,0):", el.pi0_grad[0][:, 0])
