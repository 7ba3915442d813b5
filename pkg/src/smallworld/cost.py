"""Agent cost: link cost ``beta * d(v,u)**alpha`` plus weighted separation.

An agent ``v`` with out-links ``N(v)`` pays

    beta * sum_{u in N(v)} d(v,u)**alpha + sum_{u} w_v(u) * d(u, N(v) + {v})

The serving set always contains ``v`` itself, so the cost is defined for an
empty link set.  Nodes in the serving set are at distance zero and drop out
of the second sum automatically.

The single-link add/delete deltas are computed incrementally from a cached
distance field (:class:`ServingState`).  Two add-gain kernels exist: a dense
one that evaluates every (candidate, node) pair and works for any dimension
and weighting, and a closed form for uniformly weighted rings where the gain
depends only on the gap a candidate falls in and its offset inside it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridSpec, distances_from, multi_source_distances, pairwise_distances, sphere_sizes

__all__ = [
    "TOLERANCE",
    "CostParams",
    "ProximityWeights",
    "TableWeights",
    "load_weights_csv",
    "ServingState",
    "link_cost",
    "link_costs",
    "total_cost",
    "build_serving_state",
    "add_delta",
    "delete_delta",
    "add_gains",
    "delete_deltas",
    "apply_add",
    "apply_delete",
    "add_gain_upper_bounds",
]

TOLERANCE = 1e-9

# elements per dense (candidate x node) block
_BLOCK = 1 << 22


class ProximityWeights:
    """``w_v(u) = d(v,u) ** -gamma``: nearby nodes matter more."""

    def __init__(self, gamma: float):
        if not np.isfinite(gamma) or gamma < 0:
            raise ValueError("gamma must be finite and >= 0")
        self.gamma = float(gamma)

    def row(self, g: GridSpec, v: int) -> np.ndarray:
        d = distances_from(g, v).astype(float)
        out = np.zeros_like(d)
        far = d > 0
        out[far] = d[far] ** -self.gamma
        return out

    @property
    def ref(self) -> str:
        return f"proximity:{self.gamma!r}"

    def __eq__(self, other):
        return isinstance(other, ProximityWeights) and other.gamma == self.gamma

    def __hash__(self):
        return hash(("proximity", self.gamma))


class TableWeights:
    """Explicit ``(v, u) -> weight`` table; absent pairs weigh ``default``."""

    def __init__(self, table: dict[tuple[int, int], float], default: float = 1.0, ref: str = "table"):
        for w in list(table.values()) + [default]:
            if not np.isfinite(w) or w < 0:
                raise ValueError(f"weights must be finite and nonnegative, got {w!r}")
        self.table = {(int(v), int(u)): float(w) for (v, u), w in table.items()}
        self.default = float(default)
        self.ref = ref
        self._by_agent: dict[int, list[tuple[int, float]]] = {}
        for (v, u), w in self.table.items():
            self._by_agent.setdefault(v, []).append((u, w))

    def row(self, g: GridSpec, v: int) -> np.ndarray:
        out = np.full(g.population, self.default)
        for u, w in self._by_agent.get(int(v), ()):
            out[g.check_node(u)] = w
        out[v] = 0.0
        return out

    def __eq__(self, other):
        return isinstance(other, TableWeights) and (other.table, other.default) == (self.table, self.default)

    def __hash__(self):
        return hash(("table", self.default, tuple(sorted(self.table.items()))))


def load_weights_csv(path) -> TableWeights:
    """Read a ``v,u,weight`` CSV (header optional)."""
    table = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip() == "v":
                continue
            v, u, w = row[:3]
            table[(int(v), int(u))] = float(w)
    return TableWeights(table, ref=str(Path(path)))


@dataclass(frozen=True)
class CostParams:
    """Link-cost exponent ``alpha``, multiplier ``beta`` and optional weights.

    ``weights=None`` means every node weighs 1.
    """

    alpha: float
    beta: float
    weights: ProximityWeights | TableWeights | None = None

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise ValueError(f"beta must be finite and > 0, got {self.beta!r}")

    @property
    def uniform(self) -> bool:
        return self.weights is None

    @property
    def weights_ref(self) -> str:
        return "uniform" if self.weights is None else self.weights.ref

    def weight_row(self, g: GridSpec, v: int) -> np.ndarray | None:
        if self.weights is None:
            return None
        return self.weights.row(g, v)


def link_cost(p: CostParams, g: GridSpec, v: int, u: int) -> float:
    if g.check_node(u) == g.check_node(v):
        raise ValueError("self-links are not allowed")
    return float(link_costs(p, g, v, [u])[0])


def link_costs(p: CostParams, g: GridSpec, v: int, targets) -> np.ndarray:
    """Vectorised ``beta * d(v,u)**alpha`` (no self-link check)."""
    d = pairwise_distances(g, [v], targets)[0].astype(float)
    return p.beta * d ** p.alpha


def _separation(dist: np.ndarray, weights: np.ndarray | None) -> float:
    if weights is None:
        return float(int(dist.sum()))
    return float(np.dot(weights, dist))


def _as_links(g: GridSpec, v: int, links) -> np.ndarray:
    arr = np.unique(g.check_nodes(list(links) if not isinstance(links, np.ndarray) else links))
    if np.any(arr == v):
        raise ValueError(f"agent {v} cannot link to itself")
    return arr


def total_cost(p: CostParams, g: GridSpec, v: int, links) -> float:
    v = g.check_node(v)
    links = _as_links(g, v, links)
    dist = multi_source_distances(g, np.append(links, v))
    lc = float(link_costs(p, g, v, links).sum()) if links.size else 0.0
    return lc + _separation(dist, p.weight_row(g, v))


@dataclass
class ServingState:
    """Cached distance field of one agent.

    ``dist[u]`` is the distance from ``u`` to the nearest member of
    ``links + {owner}``; the totals are kept in sync by :func:`apply_add`
    and :func:`apply_delete`.
    """

    owner: int
    links: np.ndarray
    dist: np.ndarray
    weights: np.ndarray | None
    link_cost_total: float
    separation_total: float
    _linked: np.ndarray = field(repr=False, default=None)

    @property
    def total(self) -> float:
        return self.link_cost_total + self.separation_total

    @property
    def serving(self) -> np.ndarray:
        return np.sort(np.append(self.links, self.owner))

    def is_linked(self, u: int) -> bool:
        return bool(self._linked[u])

    def candidate_mask(self) -> np.ndarray:
        """True for nodes the owner could add a link to."""
        mask = ~self._linked
        mask[self.owner] = False
        return mask


def build_serving_state(p: CostParams, g: GridSpec, v: int, links) -> ServingState:
    v = g.check_node(v)
    links = _as_links(g, v, links)
    dist = multi_source_distances(g, np.append(links, v))
    weights = p.weight_row(g, v)
    linked = np.zeros(g.population, dtype=bool)
    linked[links] = True
    lc = float(link_costs(p, g, v, links).sum()) if links.size else 0.0
    return ServingState(v, links, dist, weights, lc, _separation(dist, weights), linked)


def _check_add(g: GridSpec, state: ServingState, u: int) -> int:
    u = g.check_node(u)
    if u == state.owner:
        raise ValueError("self-links are not allowed")
    if state.is_linked(u):
        raise ValueError(f"agent {state.owner} already links to {u}")
    return u


def _check_delete(g: GridSpec, state: ServingState, u: int) -> int:
    u = g.check_node(u)
    if not state.is_linked(u):
        raise ValueError(f"agent {state.owner} has no link to {u}")
    return u


def add_delta(p: CostParams, g: GridSpec, state: ServingState, u: int) -> float:
    """Change in the owner's cost if it adds a link to ``u`` (negative = better)."""
    u = _check_add(g, state, u)
    gain = _dense_gains(g, state.dist, state.weights, np.array([u]))[0]
    return float(link_costs(p, g, state.owner, [u])[0] - gain)


def delete_delta(p: CostParams, g: GridSpec, state: ServingState, u: int) -> float:
    """Change in the owner's cost if it drops its link to ``u`` (negative = better)."""
    u = _check_delete(g, state, u)
    rest = state.links[state.links != u]
    dist = multi_source_distances(g, np.append(rest, state.owner))
    loss = _separation(dist, state.weights) - state.separation_total
    return float(loss - link_costs(p, g, state.owner, [u])[0])


def _dense_gains(g: GridSpec, dist: np.ndarray, weights, cands: np.ndarray) -> np.ndarray:
    """Separation drop for each candidate, evaluated against every node."""
    n = g.population
    out = np.empty(len(cands), dtype=np.int64 if weights is None else float)
    step = max(1, _BLOCK // n)
    everyone = np.arange(n)
    for i in range(0, len(cands), step):
        block = pairwise_distances(g, cands[i:i + step], everyone)
        np.subtract(dist[None, :], block, out=block)
        np.maximum(block, 0, out=block)
        out[i:i + step] = block.sum(axis=1) if weights is None else block @ weights
    return out


def _local_gains(g: GridSpec, dist: np.ndarray, weights, cands: np.ndarray, radius: int) -> np.ndarray:
    """Like :func:`_dense_gains` but only looks at nodes within ``radius`` of
    each candidate; exact whenever ``radius >= max(dist) - 1``."""
    d0 = distances_from(g, 0)
    offsets = np.flatnonzero(d0 <= radius)
    if offsets.size >= g.population:
        return _dense_gains(g, dist, weights, cands)
    reach = d0[offsets]
    off_coords = g.coordinates[offsets]
    out = np.empty(len(cands), dtype=np.int64 if weights is None else float)
    step = max(1, _BLOCK // offsets.size)
    strides = g.side ** np.arange(g.dimension - 1, -1, -1)
    for i in range(0, len(cands), step):
        block = cands[i:i + step]
        near = np.zeros((len(block), offsets.size), dtype=np.int64)
        for axis in range(g.dimension):
            x = g.coordinates[block, axis][:, None] + off_coords[None, :, axis]
            x -= g.side * (x >= g.side)
            near += x * strides[axis]
        drop = np.maximum(dist[near] - reach[None, :], 0)
        out[i:i + step] = drop.sum(axis=1) if weights is None else (drop * weights[near]).sum(axis=1)
    return out


def _series(lo, hi):
    """Sum of the integers lo..hi (zero when hi < lo), elementwise."""
    cnt = np.maximum(hi - lo + 1, 0)
    return (lo + hi) * cnt // 2


def _ring_gap_gain(gap: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Drop in separation when a gap of length ``gap`` between two serving
    points is split by a new serving point ``offset`` steps from its left end.

    Inside the gap, a node at offset t is served at ``min(t, gap - t)``.
    """
    y = np.minimum(offset, gap - offset)
    # nodes between the left end and the new point
    lo = y // 2 + 1
    left = 2 * _series(lo, y) - y * np.maximum(y - lo + 1, 0)
    # nodes right of the new point still in the left half of the gap
    half = gap // 2
    mid = np.maximum(half - y, 0) * y
    # nodes in the right half that switch to the new point
    lo = np.maximum(y + 1, half + 1)
    hi = np.minimum((gap + y - 1) // 2, gap - 1)
    cnt = np.maximum(hi - lo + 1, 0)
    right = (gap + y) * cnt - 2 * _series(lo, hi)
    return left + mid + right


def _ring_gaps(g: GridSpec, serving: np.ndarray, cands: np.ndarray):
    m = g.side
    idx = np.searchsorted(serving, cands, side="right")
    prev = np.where(idx == 0, serving[-1] - m, serving[idx - 1])
    nxt = np.where(idx == len(serving), serving[0] + m, serving[idx % len(serving)])
    return nxt - prev, cands - prev


def _ring_gains(g: GridSpec, serving: np.ndarray, cands: np.ndarray) -> np.ndarray:
    gap, offset = _ring_gaps(g, serving, cands)
    return _ring_gap_gain(gap, offset)


def _ring_kernel_applies(p: CostParams, g: GridSpec) -> bool:
    return g.dimension == 1 and p.uniform


def add_gains(p: CostParams, g: GridSpec, state: ServingState, cands=None, kernel: str = "auto") -> np.ndarray:
    """Exact separation drop for adding each candidate.

    ``kernel`` is ``"dense"`` (any grid, any weights), ``"local"`` (dense,
    restricted to the ball outside which no node can improve), ``"ring"``
    (d = 1, uniform weights) or ``"auto"``.
    """
    cands = np.flatnonzero(state.candidate_mask()) if cands is None else np.asarray(cands, dtype=np.int64)
    if kernel == "auto":
        kernel = "ring" if _ring_kernel_applies(p, g) else "dense"
    if kernel == "ring":
        if not _ring_kernel_applies(p, g):
            raise ValueError("ring kernel needs d = 1 and uniform weights")
        return _ring_gains(g, state.serving, cands)
    if kernel == "local":
        return _local_gains(g, state.dist, state.weights, cands, int(state.dist.max()) - 1)
    if kernel != "dense":
        raise ValueError(f"unknown kernel {kernel!r}")
    return _dense_gains(g, state.dist, state.weights, cands)


def add_gain_upper_bounds(g: GridSpec, state: ServingState) -> np.ndarray:
    """Sound upper bound on the add gain as a function of the candidate's
    current served distance ``k`` (index ``k`` of the returned array).

    A node ``w`` only improves if ``d(w,u) < dist[w] <= D`` where ``D`` is
    the largest served distance, and it improves by at most
    ``min(k, D - d(w,u))`` because ``dist`` is 1-Lipschitz.
    """
    top = int(state.dist.max())
    wmax = 1.0 if state.weights is None else float(state.weights.max(initial=0.0))
    shells = sphere_sizes(g)[:top].astype(float)
    if top == 0:
        return np.zeros(1)
    # reach[r] = D - r for r < D
    reach = top - np.arange(top, dtype=float)
    k = np.arange(top + 1, dtype=float)
    # sum_r shells[r] * min(k, reach[r]); reach is decreasing in r
    cum_shell = np.concatenate([[0.0], np.cumsum(shells)])
    cum_tail = np.concatenate([[0.0], np.cumsum(shells * reach)])
    # r <= D - k  ->  min = k ; r > D - k -> min = reach[r]
    split = np.clip(top - k.astype(int) + 1, 0, top)
    bound = k * cum_shell[split] + (cum_tail[top] - cum_tail[split])
    return wmax * bound


def delete_deltas(p: CostParams, g: GridSpec, state: ServingState, kernel: str = "auto") -> np.ndarray:
    """Exact delete delta for every current link, aligned with ``state.links``.

    The dense kernel finds, for every node, its nearest and second-nearest
    serving point; dropping a link costs each node it alone serves the gap
    between the two.  On uniformly weighted rings the merged-gap closed form
    ``floor(L**2 / 4)`` is used instead unless ``kernel="dense"``.
    """
    links = state.links
    if links.size == 0:
        return np.empty(0)
    costs = link_costs(p, g, state.owner, links)
    if kernel not in ("auto", "dense"):
        raise ValueError(f"unknown kernel {kernel!r}")
    if kernel == "auto" and _ring_kernel_applies(p, g):
        serving = state.serving
        m = g.side
        pos = np.searchsorted(serving, links)
        k = len(serving)
        left = serving[pos] - np.where(pos == 0, serving[-1] - m, serving[pos - 1])
        right = np.where(pos == k - 1, serving[0] + m, serving[(pos + 1) % k]) - serving[pos]
        loss = (left + right) ** 2 // 4 - left ** 2 // 4 - right ** 2 // 4
        return loss - costs
    serving = np.append(links, state.owner)
    dmat = pairwise_distances(g, serving, np.arange(g.population))
    owner_row = np.argmin(dmat, axis=0)
    two = np.partition(dmat, 1, axis=0)[:2]
    extra = (two[1] - two[0]).astype(float)
    if state.weights is not None:
        extra *= state.weights
    loss = np.bincount(owner_row, weights=extra, minlength=len(serving))[: len(links)]
    return loss - costs


def _refresh(p: CostParams, g: GridSpec, state: ServingState) -> None:
    state.separation_total = _separation(state.dist, state.weights)
    state.link_cost_total = float(link_costs(p, g, state.owner, state.links).sum()) if state.links.size else 0.0


def apply_add(p: CostParams, g: GridSpec, state: ServingState, u: int) -> None:
    u = _check_add(g, state, u)
    np.minimum(state.dist, distances_from(g, u), out=state.dist)
    state.links = np.sort(np.append(state.links, u))
    state._linked[u] = True
    _refresh(p, g, state)


def apply_delete(p: CostParams, g: GridSpec, state: ServingState, u: int) -> None:
    u = _check_delete(g, state, u)
    state.links = state.links[state.links != u]
    state._linked[u] = False
    serving = np.append(state.links, state.owner)
    # recompute from the remaining sources in blocks of rows
    dist = np.full(g.population, np.iinfo(np.int64).max, dtype=np.int64)
    step = max(1, _BLOCK // g.population)
    everyone = np.arange(g.population)
    for i in range(0, len(serving), step):
        np.minimum(dist, pairwise_distances(g, serving[i:i + step], everyone).min(axis=0), out=dist)
    state.dist = dist
    _refresh(p, g, state)
