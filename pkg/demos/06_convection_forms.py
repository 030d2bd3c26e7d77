"""The two discrete convection forms with constant transport.

The projection-based form and the boundary-corrected form differ by
-int_dE (beta.n)(u - Pi0 u)(v - Pi0 v), a symmetric term. Their raw matrices
therefore differ, while their skew-symmetric parts agree to round-off.
"""

import numpy as np
import scipy.sparse as sp

from polyvem.dofs import build_dof_map
from polyvem.forms import convection_boun, convection_orig, skew_symmetrize
from polyvem.harness import cached_mesh
from polyvem.projectors import mesh_projectors
from polyvem.system import scatter

mesh = cached_mesh("voro", 256)
for k in (1, 2):
    raw, skew = [], []
    for el in mesh_projectors(mesh, k):
        bx, by = np.full(len(el.qw), 1.0), np.full(len(el.qw), 2.0)
        d = convection_orig(el, bx, by) - convection_boun(el, bx, by, np.full(len(el.bw), 1.0), np.full(len(el.bw), 2.0))
        raw.append(d)
        skew.append(skew_symmetrize(d))
    dm = build_dof_map(mesh, k)
    print(f"k={k}: |B_orig - B_boun|_F = {sp.linalg.norm(scatter(dm, raw)):.3e}, "
          f"skew parts {sp.linalg.norm(scatter(dm, skew)):.1e}")
