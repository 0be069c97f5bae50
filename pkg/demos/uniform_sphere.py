# %% [markdown]
# Uniformly magnetized ball
# =========================
#
# A ball of radius 0.5 magnetized along z.  Inside, the potential is z/3;
# outside it is the dipole r0^3 z / (3 |x|^3), and the stray-field energy is
# 2 pi r0^3 / 9.  We sweep the refinement level and watch both error measures.
#
# Run with ``python3 demos/uniform_sphere.py [max_level]`` (default 5; 6 takes
# about half a minute and 1.2 GB).

# %%
import sys

import numpy as np

from invfem.analysis import convergence_slope, radial_profile
from invfem.driver import solve_case

max_level = int(sys.argv[1]) if len(sys.argv) > 1 else 5

# %%
records = []
print(f"{'L':>2} {'dof':>8} {'h':>7} {'e0':>8} {'E_h':>9} {'e(E)':>8} {'cg':>5} {'s':>6}")
for L in range(2, max_level + 1):
    sol = solve_case("sphere-uniform", L, mu=0.5)
    r = sol.record
    records.append(r)
    print(f"{L:>2} {r.dof:>8} {r.h:7.3f} {r.e0:8.4f} {r.energy:9.5f} {r.e_energy:8.4f} {r.cg_iters:>5} {r.seconds:6.1f}")
print(f"exact energy {sol.case.energy:.5f}")

# %% [markdown]
# Slopes are least-squares fits of log(error) against log(h) over the finest
# four levels.  The discrete energy approaches the exact one from below.

# %%
print("e0 slope  ", round(convergence_slope(records, "e0"), 3))
print("e(E) slope", round(convergence_slope(records, "e_energy"), 3))
assert all(r.energy <= sol.case.energy for r in records)

# %% [markdown]
# Potential along the +z axis of the finest solve: linear in the body, then
# the r^-2 tail, continuous through the interface r(x) = 1.

# %%
prof = radial_profile(sol.field, sol.case, radii=np.geomspace(0.05, 50, 16))
for p in prof:
    print(f"r={p.r:8.3f}  u_h={p.u_h: .5e}  u={p.u_exact: .5e}")
