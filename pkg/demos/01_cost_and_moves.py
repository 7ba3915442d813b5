# %% [markdown]
# # Costs and single-link moves
#
# An agent on a ring pays for its links and for how far every other node
# sits from the nearest node it links to (or from itself).

# %%
import numpy as np

from smallworld.cost import CostParams, add_delta, build_serving_state, delete_delta, total_cost
from smallworld.grid import GridSpec, multi_source_distances

g = GridSpec(dimension=1, side=5)
p = CostParams(alpha=2, beta=1)

# %%
# no links: nodes 1..4 sit at distances 1, 2, 2, 1
print(total_cost(p, g, 0, []))        # 6.0
print(total_cost(p, g, 0, [2]))       # 4 for the link + 3 separation = 7.0

# %%
# the serving state caches every node's distance to {0} + links
s = build_serving_state(p, g, 0, [])
print(s.dist)
print(add_delta(p, g, s, 2))          # +1.0, not worth it at alpha=2, beta=1

cheap = CostParams(alpha=1, beta=0.5)
print(add_delta(cheap, g, build_serving_state(cheap, g, 0, []), 2))  # -2.0

# %%
# deleting is the mirror image
s2 = build_serving_state(p, g, 0, [2])
print(delete_delta(p, g, s2, 2))      # -1.0

# %%
# distance fields on a 2-d torus from several sources
g2 = GridSpec(2, 7)
field = multi_source_distances(g2, [0, 24])
print(field.reshape(g2.shape))
