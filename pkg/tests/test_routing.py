import numpy as np
import pytest
from hypothesis import given, strategies as st

from smallworld.cost import CostParams
from smallworld.dynamics import Network, canonical_stabilize, complete_network, empty_network, grid_neighbor_network, kleinberg_network
from smallworld.grid import GridSpec, grid_distance
from smallworld.routing import (
    DELIVERED,
    HOP_LIMIT,
    STUCK,
    default_hop_limit,
    progress_profile,
    route,
    route_many,
    routing_diameter,
)

from conftest import small_grids

P = CostParams(2, 0.5)
RING9 = GridSpec(1, 9)


def test_trivial_routes():
    net = grid_neighbor_network(RING9, P)
    r = route(net, 3, 3)
    assert (r.hops, r.path, r.outcome) == (0, (3,), DELIVERED)
    r = route(net, 0, 4)
    assert r.outcome == DELIVERED and r.hops == 4 and r.path == (0, 1, 2, 3, 4)
    with pytest.raises(ValueError):
        route(net, 0, 4, hop_limit=0)


def test_complete_network_is_one_hop():
    net = complete_network(GridSpec(2, 4), P)
    stats = routing_diameter(net, "exact")
    assert stats.max_hops == 1 and stats.stuck_count == 0 and stats.pairs == 256


def test_ring_diameter():
    stats = routing_diameter(grid_neighbor_network(RING9, P), "exact")
    assert stats.max_hops == 4 and stats.stuck_count == 0


def test_stuck_and_hop_limit():
    net = empty_network(RING9, P)
    assert route(net, 0, 3).outcome == STUCK
    # a link that moves away from the target is not taken
    net = Network(RING9, P, [[8]] + [[]] * 8)
    assert route(net, 0, 2).outcome == STUCK
    net = grid_neighbor_network(RING9, P)
    r = route(net, 0, 4, hop_limit=2)
    assert r.outcome == HOP_LIMIT and r.hops == 2
    assert default_hop_limit(GridSpec(2, 9)) == 40


def test_tie_goes_to_smallest_id():
    g = GridSpec(2, 5)
    # both 1 and 5 are one step closer to 6 from 0
    net = Network(g, P, [[5, 1]] + [[]] * 24)
    assert route(net, 0, 6).path[:2] == (0, 1)


def test_exact_mode_cap():
    with pytest.raises(ValueError):
        routing_diameter(grid_neighbor_network(GridSpec(1, 100), P), "exact", exact_cap=50)
    with pytest.raises(ValueError):
        routing_diameter(grid_neighbor_network(RING9, P), "bogus")


@given(small_grids(max_n=100), st.integers(0, 10 ** 6))
def test_batched_router_matches_single(g, seed):
    net = kleinberg_network(g, P, seed)
    # drop some links so stuck routes occur
    rng = np.random.default_rng(seed)
    for v in range(g.population):
        keep = rng.random(len(net.links[v])) < 0.7
        net.set_links(v, net.links[v][keep])
    src = rng.integers(0, g.population, 50)
    dst = rng.integers(0, g.population, 50)
    hops, codes = route_many(net, src, dst)
    names = (DELIVERED, STUCK, HOP_LIMIT)
    for s, t, h, c in zip(src, dst, hops, codes):
        r = route(net, int(s), int(t))
        assert (r.hops, r.outcome) == (h, names[c])
        assert len(r.path) == r.hops + 1
        for a, b in zip(r.path, r.path[1:]):
            assert b in net.links[a]
        prof = progress_profile(net, int(s), int(t))
        assert all(y < x for x, y in zip(prof, prof[1:]))
        assert r.hops <= grid_distance(g, int(s), int(t))
        if r.outcome == DELIVERED:
            assert r.path[-1] == t


def test_sampled_is_subset_of_exact():
    g = GridSpec(1, 200)
    net, _, _ = canonical_stabilize(empty_network(g, P))
    exact = routing_diameter(net, "exact")
    sampled = routing_diameter(net, "sampled", 3000, seed=4)
    assert sampled.max_hops <= exact.max_hops
    assert exact.stuck_count == 0
    assert routing_diameter(net, "sampled", 3000, seed=4) == sampled


def test_stable_network_never_sticks():
    g = GridSpec(2, 12)
    net, _, cert = canonical_stabilize(empty_network(g, CostParams(3, 0.1)), ("add",))
    assert cert.all_add_stable
    assert routing_diameter(net, "exact").stuck_count == 0
