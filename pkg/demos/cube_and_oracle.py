# %% [markdown]
# Uniformly magnetized cube
# =========================
#
# No closed-form potential here; the stray-field energy of a unit cube with
# M = e_z is still exactly 1/6.  The Galerkin energies must climb toward it.
# For pointwise values we compare with the volume-integral (Newton potential)
# representation evaluated by nested Gauss rules.

# %%
import numpy as np

from invfem.cases import green_oracle
from invfem.driver import solve_case
from invfem.femspace import evaluate

# %%
sols = {}
for L in (2, 3, 4, 5):
    sols[L] = solve_case("cube-uniform", L, mu=0.5)
    r = sols[L].record
    print(f"L={L} dof={r.dof:>6} E_h={r.energy:.5f} e(E)={r.e_energy:.4f}")
print("exact 1/6 =", 1 / 6)

# %%
pts = np.array([[0.0, 0.0, 1.0], [0.8, 0.3, 0.9], [1.5, 1.0, 2.0], [-0.4, 0.2, -1.2], [0.0, 0.0, 3.0]])
ref = np.array([green_oracle(sols[5].case, p) for p in pts])
for L in (4, 5):
    uh, _ = evaluate(sols[L].field, pts)
    print(f"L={L}: max |u_h - u| / max |u| = {np.abs(uh - ref).max() / np.abs(ref).max():.3f}")
