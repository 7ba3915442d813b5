# %% [markdown]
# # Three regimes of the link-cost exponent
#
# alpha below, at and above d + 1 give very different stable networks.
# The sweep below is a small version of the acceptance preset; growth fits
# compare c*log2(n), c*log2(log2(n)) and c*n**gamma by residual.

# %%
import numpy as np

from smallworld.metrics import SweepConfig, run_sweeps

sides = (256, 1024, 4096)
cfgs = [
    SweepConfig(d=1, sides=sides, alphas=(1.0,), notion="add", seeds=(0,)),
    SweepConfig(d=1, sides=sides, alphas=(2.0,), notion="toggle", seeds=(0,)),
    SweepConfig(d=1, sides=sides, alphas=(4.0,), notion="toggle", seeds=(0,)),
]
rep = run_sweeps(cfgs)

# %%
for line in rep.csv_lines():
    print(line)

# %%
for key, entry in rep.fits.items():
    hops = entry["max_hops_fit"]
    print(key, entry["regime"])
    print("   degree band", round(entry["max_degree_band"], 2), " hops fit ->", hops["best"],
          {k: round(v["ssr"], 2) for k, v in hops.items() if k != "best"})
    if "gamma" in hops.get("poly", {}):
        print("   fitted hop exponent", round(hops["poly"]["gamma"], 3))
