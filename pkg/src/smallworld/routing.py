"""Greedy geographic routing over out-links.

A packet at ``p`` headed for ``t`` moves to the out-neighbour of ``p``
closest to ``t`` (smallest id on ties).  If no out-neighbour is strictly
closer than ``p`` the packet is stuck; there is no fallback to lattice
neighbours, so stuck packets expose networks that are not add-stable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Network
from .grid import GridSpec, _circular, grid_distance

__all__ = [
    "DELIVERED",
    "STUCK",
    "HOP_LIMIT",
    "RouteResult",
    "RoutingStats",
    "default_hop_limit",
    "route",
    "route_many",
    "routing_diameter",
    "progress_profile",
    "EXACT_CAP",
]

DELIVERED, STUCK, HOP_LIMIT = "delivered", "stuck", "hop_limit"
_OUTCOMES = (DELIVERED, STUCK, HOP_LIMIT)
EXACT_CAP = 4096


def default_hop_limit(g: GridSpec) -> int:
    return 4 * g.dimension * math.ceil(g.side / 2)


@dataclass(frozen=True)
class RouteResult:
    source: int
    target: int
    hops: int
    path: tuple[int, ...]
    outcome: str


@dataclass(frozen=True)
class RoutingStats:
    max_hops: int
    mean_hops: float
    stuck_count: int
    pairs: int
    mode: str

    def to_dict(self) -> dict:
        return {
            "max_hops": self.max_hops,
            "mean_hops": self.mean_hops,
            "stuck": self.stuck_count,
            "pairs": self.pairs,
            "mode": self.mode,
        }


def _next_hops(g: GridSpec, mat: np.ndarray, pos: np.ndarray, tgt: np.ndarray):
    """Greedy choice for each packet: (next node, its distance to target)."""
    cand = mat[pos]
    valid = cand >= 0
    safe = np.where(valid, cand, 0)
    coords = g.coordinates
    dist = np.zeros(cand.shape, dtype=np.int64)
    for axis in range(g.dimension):
        dist += _circular(coords[safe, axis] - coords[tgt, axis][:, None], g.side)
    dist[~valid] = np.iinfo(np.int64).max
    # rows of mat are sorted ascending, so argmin's first hit is the smallest id
    best = np.argmin(dist, axis=1)
    rows = np.arange(len(pos))
    return cand[rows, best], dist[rows, best]


def _distance(g: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _circular(g.coordinates[a] - g.coordinates[b], g.side).sum(axis=1)


def route_many(net: Network, sources, targets, hop_limit: int | None = None, mat: np.ndarray | None = None):
    """Route a batch of packets in lock step.

    Returns ``(hops, outcome_codes)`` where codes index
    ``("delivered", "stuck", "hop_limit")``.
    """
    g = net.grid
    hop_limit = default_hop_limit(g) if hop_limit is None else int(hop_limit)
    if hop_limit < 1:
        raise ValueError("hop_limit must be >= 1")
    mat = net.link_matrix() if mat is None else mat
    pos = np.asarray(sources, dtype=np.int64).copy()
    tgt = np.asarray(targets, dtype=np.int64)
    hops = np.zeros(len(pos), dtype=np.int64)
    code = np.full(len(pos), -1, dtype=np.int8)
    here = _distance(g, pos, tgt)
    code[here == 0] = 0
    live = np.flatnonzero(code < 0)
    while live.size:
        over = hops[live] >= hop_limit
        code[live[over]] = 2
        live = live[~over]
        if not live.size:
            break
        nxt, nd = _next_hops(g, mat, pos[live], tgt[live])
        stuck = nd >= here[live]
        code[live[stuck]] = 1
        live, nxt, nd = live[~stuck], nxt[~stuck], nd[~stuck]
        pos[live] = nxt
        here[live] = nd
        hops[live] += 1
        done = nd == 0
        code[live[done]] = 0
        live = live[~done]
    return hops, code


def route(net: Network, s: int, t: int, hop_limit: int | None = None) -> RouteResult:
    g = net.grid
    s, t = g.check_node(s), g.check_node(t)
    hop_limit = default_hop_limit(g) if hop_limit is None else int(hop_limit)
    if hop_limit < 1:
        raise ValueError("hop_limit must be >= 1")
    path = [s]
    p = s
    here = grid_distance(g, p, t)
    while True:
        if p == t:
            return RouteResult(s, t, len(path) - 1, tuple(path), DELIVERED)
        if len(path) - 1 >= hop_limit:
            return RouteResult(s, t, len(path) - 1, tuple(path), HOP_LIMIT)
        nbrs = net.links[p]
        if nbrs.size == 0:
            return RouteResult(s, t, len(path) - 1, tuple(path), STUCK)
        d = _distance(g, nbrs, np.full(len(nbrs), t))
        i = int(np.argmin(d))
        if d[i] >= here:
            return RouteResult(s, t, len(path) - 1, tuple(path), STUCK)
        p, here = int(nbrs[i]), int(d[i])
        path.append(p)


def progress_profile(net: Network, s: int, t: int, hop_limit: int | None = None) -> list[int]:
    """Distance to ``t`` at every node on the greedy route from ``s``."""
    res = route(net, s, t, hop_limit)
    return [grid_distance(net.grid, p, t) for p in res.path]


def _pairs_all(n: int):
    for s in range(n):
        yield np.full(n, s, dtype=np.int64), np.arange(n, dtype=np.int64)


def routing_diameter(
    net: Network,
    mode: str = "exact",
    sample_pairs: int = 10000,
    seed: int = 0,
    exact_cap: int = EXACT_CAP,
    hop_limit: int | None = None,
    batch: int = 1 << 18,
) -> RoutingStats:
    """Max and mean greedy hop count over ordered pairs, plus the number of
    routes that were not delivered.

    ``mode="exact"`` covers every ordered pair (``n <= exact_cap``);
    ``mode="sampled"`` draws ``sample_pairs`` uniform ordered pairs from a
    generator seeded with ``seed``.  Max and mean are over delivered routes.
    """
    n = net.population
    mat = net.link_matrix()
    if mode == "exact":
        if n > exact_cap:
            raise ValueError(f"exact routing needs n <= {exact_cap} (n = {n}); use sampled mode")
        per = max(1, batch // n)
        chunks = (
            (np.repeat(np.arange(s0, min(s0 + per, n)), n), np.tile(np.arange(n), min(s0 + per, n) - s0))
            for s0 in range(0, n, per)
        )
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        src = rng.integers(0, n, size=sample_pairs)
        dst = rng.integers(0, n, size=sample_pairs)
        chunks = ((src[i:i + batch], dst[i:i + batch]) for i in range(0, sample_pairs, batch))
    else:
        raise ValueError(f"unknown routing mode {mode!r}")
    top, total, delivered, bad, pairs = 0, 0, 0, 0, 0
    for src, dst in chunks:
        hops, code = route_many(net, src, dst, hop_limit, mat)
        ok = code == 0
        pairs += len(src)
        bad += int((~ok).sum())
        if ok.any():
            top = max(top, int(hops[ok].max()))
            total += int(hops[ok].sum())
            delivered += int(ok.sum())
    mean = total / delivered if delivered else 0.0
    return RoutingStats(top, mean, bad, pairs, mode)


def outcome_name(code: int) -> str:
    return _OUTCOMES[code]
