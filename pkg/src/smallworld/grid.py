"""The d-dimensional circular grid (torus) and its L1 metric.

Nodes are integers in ``[0, side**dimension)`` mapped to coordinate vectors
by row-major mixed-radix encoding.  Distances are sums of per-axis circular
gaps, which is the shortest-path metric of the 2d-regular torus lattice.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable

import numpy as np

__all__ = [
    "GridSpec",
    "grid_distance",
    "distances_from",
    "pairwise_distances",
    "set_distance",
    "sphere",
    "ball",
    "sphere_sizes",
    "ball_size",
    "multi_source_distances",
]


@dataclass(frozen=True)
class GridSpec:
    """A torus with ``side`` nodes along each of ``dimension`` axes."""

    dimension: int
    side: int

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension!r}")
        if int(self.side) != self.side or self.side < 3:
            raise ValueError(f"side must be an integer >= 3, got {self.side!r}")

    @property
    def population(self) -> int:
        return self.side ** self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dimension

    @property
    def half(self) -> int:
        return self.side // 2

    @property
    def diameter(self) -> int:
        """Largest grid distance between two nodes, ``d * floor(m / 2)``."""
        return self.dimension * self.half

    @cached_property
    def coordinates(self) -> np.ndarray:
        """``(n, d)`` table of node coordinates, row-major."""
        ids = np.arange(self.population)
        return np.stack(np.unravel_index(ids, self.shape), axis=1).astype(np.int64)

    @cached_property
    def neighbors(self) -> np.ndarray:
        """``(n, 2d)`` table of lattice neighbours (distance exactly 1)."""
        coords = self.coordinates
        cols = []
        for axis in range(self.dimension):
            for step in (-1, 1):
                shifted = coords.copy()
                shifted[:, axis] = (shifted[:, axis] + step) % self.side
                cols.append(self.node_id(shifted))
        return np.stack(cols, axis=1)

    def check_node(self, u) -> int:
        if isinstance(u, (bool, np.bool_)) or int(u) != u or not 0 <= u < self.population:
            raise ValueError(f"node id {u!r} outside [0, {self.population})")
        return int(u)

    def check_nodes(self, nodes) -> np.ndarray:
        arr = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.population):
            raise ValueError(f"node ids outside [0, {self.population})")
        return arr

    def coords_of(self, u: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(self.check_node(u), self.shape))

    def node_id(self, coords) -> np.ndarray | int:
        """Inverse of the coordinate encoding; accepts one vector or an ``(k, d)`` array."""
        arr = np.asarray(coords, dtype=np.int64) % self.side
        if arr.ndim == 1:
            return int(np.ravel_multi_index(tuple(arr), self.shape))
        return np.ravel_multi_index(tuple(arr.T), self.shape)

    def translate(self, nodes, by: int) -> np.ndarray:
        """Shift ``nodes`` by the coordinate vector of node ``by`` (torus addition)."""
        nodes = self.check_nodes(nodes)
        shifted = self.coordinates[nodes] + self.coordinates[by]
        return np.asarray(self.node_id(shifted.reshape(-1, self.dimension)), dtype=np.int64)


def _circular(diff: np.ndarray, side: int) -> np.ndarray:
    diff = np.abs(diff)
    return np.minimum(diff, side - diff)


def grid_distance(g: GridSpec, u: int, v: int) -> int:
    cu = g.coordinates[g.check_node(u)]
    cv = g.coordinates[g.check_node(v)]
    return int(_circular(cu - cv, g.side).sum())


def distances_from(g: GridSpec, u: int) -> np.ndarray:
    """Grid distance from ``u`` to every node, as an int64 array of length n."""
    cu = g.coordinates[g.check_node(u)]
    return _circular(g.coordinates - cu, g.side).sum(axis=1)


def pairwise_distances(g: GridSpec, a, b) -> np.ndarray:
    """``len(a) x len(b)`` matrix of grid distances."""
    ca = g.coordinates[np.asarray(a, dtype=np.int64)]
    cb = g.coordinates[np.asarray(b, dtype=np.int64)]
    out = np.zeros((len(ca), len(cb)), dtype=np.int64)
    for axis in range(g.dimension):
        out += _circular(ca[:, axis, None] - cb[None, :, axis], g.side)
    return out


def set_distance(g: GridSpec, u: int, nodes: Iterable[int]) -> int:
    nodes = g.check_nodes(list(nodes))
    if nodes.size == 0:
        raise ValueError("set_distance needs a nonempty node set")
    return int(pairwise_distances(g, [g.check_node(u)], nodes).min())


def _compositions(total: int, parts: int, cap: int):
    if parts == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(min(total, cap) + 1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def _axis_positions(x: int, c: int, side: int) -> tuple[int, ...]:
    # at c == 0 or 2c == side both directions land on the same coordinate
    if c == 0 or 2 * c == side:
        return ((x + c) % side,)
    return ((x - c) % side, (x + c) % side)


def sphere(g: GridSpec, v: int, radius: int) -> np.ndarray:
    """Sorted ids of all nodes at grid distance exactly ``radius`` from ``v``.

    Generated from per-axis offset compositions, so the cost scales with
    the sphere size rather than with n.  Radii beyond the torus diameter
    give an empty array.
    """
    origin = g.coords_of(v)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    found = []
    for comp in _compositions(int(radius), g.dimension, g.half):
        axes = [_axis_positions(x, c, g.side) for x, c in zip(origin, comp)]
        found.extend(product(*axes))
    if not found:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.asarray(g.node_id(np.array(found)), dtype=np.int64).reshape(-1))


def ball(g: GridSpec, v: int, radius: int) -> np.ndarray:
    """Sorted ids of all nodes within grid distance ``radius`` of ``v``."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    shells = [sphere(g, v, r) for r in range(min(int(radius), g.diameter) + 1)]
    return np.sort(np.concatenate(shells))


def sphere_sizes(g: GridSpec) -> np.ndarray:
    """``|S(v, l)|`` for l = 0 .. diameter (independent of v).

    The per-axis counts (one node at gap 0, two at each interior gap, one
    at gap m/2 for even m) are convolved across axes.
    """
    axis = np.full(g.half + 1, 2, dtype=np.int64)
    axis[0] = 1
    if g.side % 2 == 0:
        axis[-1] = 1
    sizes = np.array([1], dtype=np.int64)
    for _ in range(g.dimension):
        sizes = np.convolve(sizes, axis)
    return sizes


def ball_size(g: GridSpec, radius: int) -> int:
    return int(sphere_sizes(g)[: max(int(radius), -1) + 1].sum())


def multi_source_distances(g: GridSpec, sources) -> np.ndarray:
    """Distance from every node to the nearest of ``sources``.

    Level-synchronous breadth-first sweep over the lattice started from all
    sources at once; every node is settled exactly once, so the work is
    O(n * d).
    """
    src = np.unique(g.check_nodes(sources))
    if src.size == 0:
        raise ValueError("multi_source_distances needs at least one source")
    dist = np.full(g.population, -1, dtype=np.int64)
    dist[src] = 0
    frontier = src
    level = 0
    nbrs = g.neighbors
    while frontier.size:
        level += 1
        cand = nbrs[frontier].ravel()
        cand = cand[dist[cand] < 0]
        if cand.size == 0:
            break
        frontier = np.unique(cand)
        dist[frontier] = level
    return dist
