# %% [markdown]
# Unfitted interface coupling
#
# The vertical line x = x0 splits the square into two subdomains that do not
# follow the mesh. Each side gets its own P1 copy on the elements it touches,
# and a piecewise constant multiplier glues them along the cut.

# %%
from lagstab import classify_and_cut, build_unit_square_mesh, interface_convergence, solve_interface

geom = classify_and_cut(build_unit_square_mesh(8), 0.5137)
print("cut elements:", len(geom.cut_elements), " band faces:", len(geom.band_faces))

# %%
recs, slopes = interface_convergence([8, 16, 32, 64], x0=0.5137)
for r in recs:
    print(f"n={r.n:3d}  H1 {r.err_h1:.3e}  L2 {r.err_l2:.3e}")
print("rates:", {k: round(v, 3) for k, v in slopes.items()})

# %%
# Sliver cuts: the interface creeps towards the grid line x = 1/2
base = solve_interface(32, 0.5137)[1].err_h1
for eps in (0.5, 0.1, 0.01, 1e-4):
    r = solve_interface(32, 0.5 + eps / 32)[1]
    print(f"eps={eps:<7g} err_h1 / baseline = {r.err_h1 / base:.4f}")
