# %% [markdown]
# # From an empty ring to a navigable network
#
# Every agent repeatedly applies its best improving add/delete move.  At
# alpha = 2 on a ring the result has about log2(n) links per node and greedy
# routing reaches any target in a logarithmic number of hops.

# %%
import numpy as np

from smallworld.cost import CostParams
from smallworld.dynamics import canonical_stabilize, empty_network, stabilize
from smallworld.grid import GridSpec
from smallworld.routing import route, routing_diameter

g = GridSpec(1, 256)
p = CostParams(alpha=2, beta=0.5)

# %%
net, log, cert = stabilize(empty_network(g, p), moves=("add", "delete"))
print(len(log), "moves,", cert.rounds, "rounds, stable:", cert.stable)
print("links of agent 0:", net.links[0])
print("degrees:", set(net.degrees().tolist()))

# %%
# every ordered pair, greedy forwarding only over links
stats = routing_diameter(net, "exact")
print(stats)
print(route(net, 0, 128).path)

# %%
# the torus looks the same from every node, so solving agent 0 and
# translating its links gives a stable network much faster
canon, clog, ccert = canonical_stabilize(empty_network(GridSpec(1, 4096), p))
print(len(canon.links[0]), "links per agent; certified:", ccert.stable)
print(routing_diameter(canon, "sampled", sample_pairs=5000, seed=1))
