# %% [markdown]
# Vortex ball
# ===========
#
# Unit-length magnetization ``cos(theta) e_phi + sin(theta) e_theta`` in a ball
# of radius 0.5.  M is tangent to the boundary, so all the field comes from
# ``div M = 2 z / |x|^2``; the exterior potential is again a dipole.  The outer
# tetrahedron is enlarged to R0 = 6 for this case.

# %%
import sys

from invfem.analysis import convergence_slope, loglog_slope
from invfem.driver import sweep

max_level = int(sys.argv[1]) if len(sys.argv) > 1 else 5
levels = list(range(2, max_level + 1))

# %%
for mu in (1.0, 0.5):
    recs = sweep("sphere-vortex", levels, (mu,))
    print(f"mu = {mu}")
    for r in recs:
        print(f"  L={r.L} dof={r.dof:>7} h={r.h:.3f} e0={r.e0:.4f} E_h={r.energy:.5f} e(E)={r.e_energy:.4f}")
    print("  e0 slope", round(convergence_slope(recs, "e0"), 3),
          " e(E) slope", round(convergence_slope(recs, "e_energy"), 3))

# %% [markdown]
# The energy error starts slowly.  Its local slope between consecutive
# levels shows where the asymptotic regime begins.

# %%
for a, b, c in zip(recs, recs[1:], recs[2:]):
    print(f"L={a.L}..{c.L}: local slope {loglog_slope([a.h, b.h, c.h], [a.e_energy, b.e_energy, c.e_energy]):.2f}")
