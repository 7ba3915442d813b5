import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smallworld.grid import (
    GridSpec,
    ball,
    ball_size,
    grid_distance,
    multi_source_distances,
    set_distance,
    sphere,
    sphere_sizes,
)
from smallworld.oracle import oracle_distance

from conftest import small_grids


def test_spec_rejects_tiny_grids():
    with pytest.raises(ValueError):
        GridSpec(0, 5)
    with pytest.raises(ValueError):
        GridSpec(1, 2)


def test_node_id_roundtrip():
    g = GridSpec(3, 4)
    for u in range(g.population):
        assert g.node_id(g.coords_of(u)) == u
    # row-major: last axis varies fastest
    assert g.coords_of(1) == (0, 0, 1)
    assert g.coords_of(4) == (0, 1, 0)


def test_invalid_node_rejected():
    g = GridSpec(1, 8)
    with pytest.raises(ValueError):
        grid_distance(g, 0, 8)
    with pytest.raises(ValueError):
        grid_distance(g, -1, 0)


def test_distance_examples():
    assert grid_distance(GridSpec(1, 8), 0, 5) == 3
    g = GridSpec(2, 6)
    assert grid_distance(g, g.node_id((0, 0)), g.node_id((3, 4))) == 5
    assert grid_distance(g, 7, 7) == 0


def test_set_distance_examples():
    g = GridSpec(1, 8)
    assert set_distance(g, 0, {2, 7}) == 1
    assert set_distance(g, 2, {2, 7}) == 0
    g2 = GridSpec(2, 6)
    s = {g2.node_id((3, 4)), g2.node_id((1, 1))}
    assert set_distance(g2, 0, s) == 2
    with pytest.raises(ValueError):
        set_distance(g, 0, [])


@pytest.mark.parametrize("d,m", [(1, 3), (1, 12), (2, 3), (2, 7), (3, 3), (3, 5)])
def test_metric_axioms_exhaustive(d, m):
    g = GridSpec(d, m)
    n = g.population
    table = np.array([[oracle_distance(d, m, u, v) for v in range(n)] for u in range(n)])
    assert np.array_equal(table, table.T)
    assert np.all((table == 0) == np.eye(n, dtype=bool))
    # triangle inequality through every intermediate node
    for w in range(n):
        assert np.all(table <= table[:, [w]] + table[[w], :])
    for u in range(n):
        assert np.array_equal(table[u], [grid_distance(g, u, v) for v in range(n)])


def test_sphere_examples():
    g = GridSpec(1, 8)
    assert sorted(sphere(g, 5, 3)) == [0, 2]
    assert list(sphere(g, 5, 0)) == [5]
    g2 = GridSpec(2, 9)
    assert len(sphere(g2, 40, 2)) == 8


def test_ball_examples():
    assert len(ball(GridSpec(2, 5), 12, 2)) == 13
    assert list(ball(GridSpec(2, 5), 12, 0)) == [12]
    assert sorted(ball(GridSpec(1, 8), 3, 4)) == list(range(8))
    assert sorted(ball(GridSpec(1, 8), 3, 9)) == list(range(8))


def test_sphere_beyond_diameter_is_empty():
    g = GridSpec(2, 5)
    assert len(sphere(g, 0, g.diameter + 1)) == 0


@given(small_grids(max_n=216))
def test_sphere_matches_enumeration(g):
    n = g.population
    for v in {0, n // 2, n - 1}:
        dist = np.array([oracle_distance(g.dimension, g.side, v, u) for u in range(n)])
        for radius in range(g.diameter + 2):
            got = sphere(g, v, radius)
            assert len(got) == len(set(got.tolist()))
            assert sorted(got) == sorted(np.flatnonzero(dist == radius))
            assert len(ball(g, v, radius)) == ball_size(g, radius) == int((dist <= radius).sum())


def test_sphere_counts_independent_of_v():
    g = GridSpec(2, 6)
    sizes = sphere_sizes(g)
    for v in range(g.population):
        assert [len(sphere(g, v, r)) for r in range(len(sizes))] == list(sizes)


@pytest.mark.parametrize("m", [9, 10, 21, 40])
def test_small_radius_counts(m):
    g1, g2 = GridSpec(1, m), GridSpec(2, m)
    for radius in range(1, m // 2):
        assert len(sphere(g1, 0, radius)) == 2
        assert len(sphere(g2, 0, radius)) == 4 * radius
        assert ball_size(g1, radius) == 2 * radius + 1
        assert ball_size(g2, radius) == 2 * radius ** 2 + 2 * radius + 1


def test_multi_source_examples():
    g = GridSpec(1, 5)
    assert multi_source_distances(g, [0]).tolist() == [0, 1, 2, 2, 1]
    assert multi_source_distances(g, [0, 2]).tolist() == [0, 1, 0, 1, 1]
    assert multi_source_distances(g, range(5)).tolist() == [0] * 5
    with pytest.raises(ValueError):
        multi_source_distances(g, [])


@given(small_grids(max_n=4096), st.data())
def test_multi_source_matches_brute_force(g, data):
    n = g.population
    k = data.draw(st.integers(1, min(6, n)))
    sources = data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k))
    got = multi_source_distances(g, sources)
    nodes = sorted(set(sources))
    # brute force over a sample of targets keeps large grids affordable
    for u in range(0, n, max(1, n // 64)):
        assert got[u] == min(oracle_distance(g.dimension, g.side, u, s) for s in nodes)


def test_translate_preserves_distance():
    g = GridSpec(2, 7)
    a, b = np.array([3, 10, 44]), np.array([0, 48, 20])
    for by in (0, 5, 23, 48):
        ta, tb = g.translate(a, by), g.translate(b, by)
        assert [grid_distance(g, x, y) for x, y in zip(ta, tb)] == [grid_distance(g, x, y) for x, y in zip(a, b)]


def test_neighbors_table():
    g = GridSpec(2, 4)
    for u in range(g.population):
        nbrs = set(g.neighbors[u].tolist())
        assert nbrs == {w for w in range(g.population) if grid_distance(g, u, w) == 1}
    assert list(itertools.chain(*[sorted(GridSpec(1, 5).neighbors[0])])) == [1, 4]
