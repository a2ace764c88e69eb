# %% [markdown]
# Residual stabilisation versus Nitsche
#
# Eliminating the multiplier from the residual-stabilised formulation gives
# Nitsche's method with penalty 1/(gamma h). So for the nonsymmetric variant,
# the distance to penalty-free Nitsche shrinks as gamma grows. The symmetric
# variant becomes singular at isolated values of gamma.

# %%
import numpy as np

from lagstab import gamma_sweep

for r in gamma_sweep("bh-nonsym", [10.0, 100.0, 1000.0], n=20):
    print(f"gamma={r.gamma:7.1f}  ||u_BH - u_Nit|| = {r.distance:.3e}")

# %%
rows = gamma_sweep("bh-sym", np.round(np.arange(1.0, 4.0 + 1e-9, 0.05), 10), n=20)
for r in rows:
    mark = "  <- eigenvalue crossing" if r.near_singular else ""
    print(f"gamma={r.gamma:4.2f} neg.eigs={r.negative_eigs:3d} pivot={r.pivot_ratio:.2e}{mark}")
