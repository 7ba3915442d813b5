# %% [markdown]
# # Degree growth on 2-d tori (evidence only)
#
# For d = 1 and alpha > d + 1 the degree of stable networks grows very
# slowly.  Whether the same holds for d >= 2 is open; the probe below
# measures it, with an alpha = d + 1 series for contrast.

# %%
from smallworld.metrics import conjecture_probe

rep = conjecture_probe(d=2, alphas=(4.0,), sides=(8, 16, 32), seeds=(0,))
for row in rep.rows:
    print(row["alpha"], row["side"], row["n"], "max degree", row["max_degree"], "max hops", row["max_hops"])

# %%
for key, entry in rep.fits.items():
    print(key, "degree fit ->", entry["max_degree_fit"]["best"])
