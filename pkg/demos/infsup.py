# %% [markdown]
# Discrete inf-sup constants
#
# beta_h is the square root of the smallest eigenvalue of
# (B M_V^-1 B^T + S) x = beta^2 M_L x. A pair is stable when beta_h stays
# away from zero under refinement.

# %%
from lagstab import compute_infsup, infsup_matrices

levels = (8, 16, 32)


def betas(*args):
    return [compute_infsup(*infsup_matrices(n, *args)) for n in levels]


# %%
cases = [
    ("P1 / P0 on a twice refined trace", (1, "P0-disc", 2)),
    ("  + projection stabiliser", (1, "P0-disc", 2, "projection")),
    ("  + jump stabiliser", (1, "P0-disc", 2, "jump")),
    ("P1 / P0 on the matching trace", (1, "P0-disc", 1)),
    ("P1 / continuous P1", (1, "P1-cont", 1)),
    ("P2 / P2-disc", (2, "P2-disc", 1)),
    ("  + projection stabiliser", (2, "P2-disc", 1, "projection")),
]
for name, args in cases:
    print(f"{name:35s}", " ".join(f"{b:.4f}" for b in betas(*args)))

# %% [markdown]
# The refined P0 space has more multiplier dofs per side (2n) than the
# primal trace has nodes (n + 1), so B has a kernel and beta_h is zero at
# every level. Either stabiliser lifts it to an h-independent value. On the
# matching trace, P1/P0 is not singular but beta_h halves with every
# refinement.
