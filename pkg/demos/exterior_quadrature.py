# %% [markdown]
# Quadrature of the exterior stiffness
# ====================================
#
# Exterior integrals are pulled back to the star mesh, where the integrand
# ``r*^(2 gamma - 4) w_i . w_j`` blows up like a negative power of r* near the
# origin.  Elements touching the origin are integrated exactly along rays
# (the integrand is homogeneous there); the others are split until r* varies
# by less than 30% per piece.  Raising the base rule from degree 5 to 8 then
# barely moves the matrix.

# %%
import numpy as np

from invfem.assembly import assemble_infinite_stiffness
from invfem.femspace import build_dof_space
from invfem.geometry import build_big_tetra_decomposition
from invfem.meshing import build_mesh_pair
from invfem.quadrature import tet_rule

d = build_big_tetra_decomposition(4.0)

# %%
for mu in (1.0, 0.5):
    for L in (1, 2, 3):
        s = build_dof_space(build_mesh_pair(d, L, mu), 1.0)
        A5 = assemble_infinite_stiffness(s, tet_rule(5))
        A8 = assemble_infinite_stiffness(s, tet_rule(8))
        d5, d8 = A5.diagonal(), A8.diagonal()
        hats = d8 > 0
        entry = abs(A5 - A8).max() / abs(A8).max()
        diag = (np.abs(d5 - d8)[hats] / d8[hats]).max()
        print(f"mu={mu} L={L}: max entry diff {entry:.1e}, max hat diff {diag:.1e}")
