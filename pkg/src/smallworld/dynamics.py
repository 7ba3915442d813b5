"""Networks, single-link improving moves, stabilisation and certification."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cost import (
    TOLERANCE,
    CostParams,
    ServingState,
    add_gain_upper_bounds,
    add_gains,
    apply_add,
    apply_delete,
    build_serving_state,
    delete_deltas,
    link_costs,
)
from .grid import GridSpec, distances_from

__all__ = [
    "Network",
    "Move",
    "MoveLog",
    "StabilityCertificate",
    "UnsupportedModeError",
    "empty_network",
    "grid_neighbor_network",
    "kleinberg_network",
    "complete_network",
    "initial_network",
    "best_add_move",
    "best_delete_move",
    "best_move",
    "stabilize",
    "certify",
    "canonical_stabilize",
    "default_max_rounds",
    "default_beta",
]

ADD, DELETE = "add", "delete"


class UnsupportedModeError(ValueError):
    pass


def default_beta(dimension: int) -> float:
    return 0.5 if dimension == 1 else 0.1


def default_max_rounds(n: int) -> int:
    return 10 * math.ceil(math.log2(n)) + 10


class Network:
    """Directed out-link sets ``N(v)`` over a grid, with the cost parameters
    every agent uses."""

    def __init__(self, grid: GridSpec, params: CostParams, links=None):
        self.grid = grid
        self.params = params
        n = grid.population
        if links is None:
            links = [()] * n
        if len(links) != n:
            raise ValueError(f"expected {n} link sets, got {len(links)}")
        self.links = [self._clean(v, nbrs) for v, nbrs in enumerate(links)]

    def _clean(self, v, nbrs) -> np.ndarray:
        arr = np.unique(self.grid.check_nodes(nbrs))
        if np.any(arr == v):
            raise ValueError(f"agent {v} links to itself")
        return arr

    def set_links(self, v: int, nbrs) -> None:
        self.links[v] = self._clean(v, nbrs)

    @property
    def population(self) -> int:
        return self.grid.population

    def degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self.links], dtype=np.int64)

    def copy(self) -> "Network":
        out = Network.__new__(Network)
        out.grid, out.params = self.grid, self.params
        out.links = [x.copy() for x in self.links]
        return out

    def link_matrix(self) -> np.ndarray:
        """``(n, max_degree)`` array of sorted links padded with -1."""
        k = int(self.degrees().max(initial=0))
        mat = np.full((self.population, max(k, 1)), -1, dtype=np.int64)
        for v, nbrs in enumerate(self.links):
            mat[v, : len(nbrs)] = nbrs
        return mat

    def is_translation_invariant(self) -> bool:
        """True when every ``N(v)`` is ``N(0)`` shifted by ``v``."""
        base = self.links[0]
        if np.any(self.degrees() != len(base)):
            return False
        if len(base) == 0:
            return True
        return bool(np.array_equal(_translated_link_matrix(self.grid, base), self.link_matrix()))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.params == other.params
            and all(np.array_equal(a, b) for a, b in zip(self.links, other.links))
        )

    def __repr__(self):
        return f"Network({self.grid}, {self.params}, max_degree={int(self.degrees().max(initial=0))})"


def _translated_link_matrix(g: GridSpec, base: np.ndarray) -> np.ndarray:
    coords = g.coordinates
    shifted = coords[None, base, :] + coords[:, None, :]
    ids = np.asarray(g.node_id(shifted.reshape(-1, g.dimension))).reshape(g.population, len(base))
    return np.sort(ids, axis=1)


def empty_network(g: GridSpec, p: CostParams) -> Network:
    return Network(g, p)


def complete_network(g: GridSpec, p: CostParams) -> Network:
    everyone = np.arange(g.population)
    return Network(g, p, [everyone[everyone != v] for v in everyone])


def grid_neighbor_network(g: GridSpec, p: CostParams) -> Network:
    return Network(g, p, [np.unique(row) for row in g.neighbors])


def kleinberg_network(g: GridSpec, p: CostParams, seed: int, long_links: int = 1, exponent: float | None = None) -> Network:
    """Lattice neighbours plus ``long_links`` random links per agent drawn
    with probability proportional to ``d(v,u) ** -exponent`` among nodes at
    distance >= 2 (``exponent`` defaults to ``alpha``)."""
    exponent = p.alpha if exponent is None else exponent
    rng = np.random.default_rng(seed)
    d0 = distances_from(g, 0).astype(float)
    far = np.flatnonzero(d0 >= 2)
    k = min(long_links, far.size)
    probs = d0[far] ** -exponent
    probs /= probs.sum()
    links = []
    for v in range(g.population):
        offsets = rng.choice(far, size=k, replace=False, p=probs) if k else np.empty(0, dtype=np.int64)
        chosen = g.translate(offsets, v) if k else offsets
        links.append(np.union1d(g.neighbors[v], chosen))
    return Network(g, p, links)


INITIALIZERS = ("empty", "grid-neighbors", "kleinberg")


def initial_network(g: GridSpec, p: CostParams, init: str = "empty", seed: int = 0) -> Network:
    if init == "empty":
        return empty_network(g, p)
    if init == "grid-neighbors":
        return grid_neighbor_network(g, p)
    if init == "kleinberg":
        return kleinberg_network(g, p, seed)
    raise ValueError(f"unknown initialisation {init!r}; choose from {', '.join(INITIALIZERS)}")


@dataclass(frozen=True)
class Move:
    round: int
    agent: int
    kind: str
    target: int
    delta: float


@dataclass
class MoveLog:
    moves: list[Move] = field(default_factory=list)

    def __len__(self):
        return len(self.moves)

    def __iter__(self):
        return iter(self.moves)

    def append(self, move: Move) -> None:
        self.moves.append(move)

    def replay(self, net: Network) -> Network:
        out = net.copy()
        for mv in self.moves:
            cur = out.links[mv.agent]
            if mv.kind == ADD:
                out.set_links(mv.agent, np.append(cur, mv.target))
            else:
                out.set_links(mv.agent, cur[cur != mv.target])
        return out


@dataclass
class StabilityCertificate:
    """Per-agent stability flags plus the worst violating move of each
    agent that is unstable under ``notion``."""

    notion: str
    add_stable: np.ndarray
    toggle_stable: np.ndarray
    violations: dict = field(default_factory=dict)
    truncated: bool = False
    rounds: int = 0
    by_symmetry: bool = False

    @property
    def all_add_stable(self) -> bool:
        return bool(self.add_stable.all())

    @property
    def all_toggle_stable(self) -> bool:
        return bool(self.toggle_stable.all())

    @property
    def stable(self) -> bool:
        return self.all_toggle_stable if self.notion == "toggle" else self.all_add_stable

    def to_dict(self) -> dict:
        return {
            "notion": self.notion,
            "stable": self.stable,
            "all_add_stable": self.all_add_stable,
            "all_toggle_stable": self.all_toggle_stable,
            "unstable_agents": int((~(self.toggle_stable if self.notion == "toggle" else self.add_stable)).sum()),
            "truncated": self.truncated,
            "rounds": self.rounds,
            "by_symmetry": self.by_symmetry,
            "violations": [
                {"agent": v, "kind": k, "target": t, "delta": d}
                for v, (k, t, d) in sorted(self.violations.items())
            ],
        }


def _state(net: Network, v: int) -> ServingState:
    return build_serving_state(net.params, net.grid, v, net.links[v])


# deltas this close are summation-order noise and count as ties
TIE_EPS = 1e-12


def _tie_eps(delta: float) -> float:
    return TIE_EPS * max(1.0, abs(delta))


def _pick(cands: np.ndarray, deltas: np.ndarray):
    """Smallest delta below -TOLERANCE, ties to the smallest id."""
    ok = deltas < -TOLERANCE
    if not ok.any():
        return None
    cands, deltas = cands[ok], deltas[ok]
    best = deltas.min()
    tied = np.flatnonzero(deltas <= best + _tie_eps(best))
    i = int(tied[np.argmin(cands[tied])])
    return int(cands[i]), float(deltas[i])


def _better(found, best) -> bool:
    if best is None:
        return True
    eps = _tie_eps(best[1])
    if found[1] < best[1] - eps:
        return True
    return found[1] <= best[1] + eps and found[0] < best[0]


def _best_add_pruned(p: CostParams, g: GridSpec, state: ServingState, cands: np.ndarray):
    costs = link_costs(p, g, state.owner, cands)
    lower = costs - add_gain_upper_bounds(g, state)[state.dist[cands]]
    order = np.lexsort((cands, lower))
    block = max(1, (1 << 22) // g.population)
    best = None
    pos = 0
    while pos < len(order):
        bar = lower[order[pos]]
        if (best is None and bar >= -TOLERANCE) or (best is not None and bar > best[1] + _tie_eps(best[1])):
            break
        chunk = order[pos:pos + block]
        pos += block
        deltas = costs[chunk] - add_gains(p, g, state, cands[chunk], kernel="local")
        found = _pick(cands[chunk], deltas)
        if found is not None and _better(found, best):
            best = found
    return best


def best_add_move(net: Network, v: int, mode: str = "pruned", state: ServingState | None = None):
    """Most improving single link addition for agent ``v`` as ``(target, delta)``,
    or ``None`` if no addition lowers the cost by more than the tolerance.

    ``mode="exact"`` evaluates every candidate against every node.
    ``mode="pruned"`` returns the same move but skips work: on uniformly
    weighted rings only the gap around each candidate is evaluated; otherwise
    candidates are visited in order of a sound lower bound on their delta,
    each is evaluated only over the ball in which nodes can improve, and the
    scan stops once no remaining candidate can beat the incumbent.
    """
    p, g = net.params, net.grid
    state = _state(net, v) if state is None else state
    cands = np.flatnonzero(state.candidate_mask())
    if cands.size == 0:
        return None
    if mode == "exact":
        deltas = link_costs(p, g, state.owner, cands) - add_gains(p, g, state, cands, kernel="dense")
        return _pick(cands, deltas)
    if mode != "pruned":
        raise ValueError(f"unknown search mode {mode!r}")
    if g.dimension == 1 and p.uniform:
        deltas = link_costs(p, g, state.owner, cands) - add_gains(p, g, state, cands, kernel="ring")
        return _pick(cands, deltas)
    return _best_add_pruned(p, g, state, cands)


def best_delete_move(net: Network, v: int, state: ServingState | None = None):
    """Most improving single link removal for agent ``v``, or ``None``."""
    state = _state(net, v) if state is None else state
    if state.links.size == 0:
        return None
    return _pick(state.links, delete_deltas(net.params, net.grid, state))


def best_move(net: Network, v: int, moves, mode: str = "pruned", state: ServingState | None = None):
    """``(kind, target, delta)`` of the best improving move, deletes winning ties."""
    state = _state(net, v) if state is None else state
    add = best_add_move(net, v, mode, state) if ADD in moves else None
    drop = best_delete_move(net, v, state) if DELETE in moves else None
    if drop is not None and (add is None or drop[1] <= add[1] + _tie_eps(add[1])):
        return DELETE, drop[0], drop[1]
    if add is not None:
        return ADD, add[0], add[1]
    return None


def _normalise_moves(moves) -> frozenset:
    if isinstance(moves, str):
        moves = {"add": {ADD}, "toggle": {ADD, DELETE}}.get(moves, {moves})
    moves = frozenset(moves)
    if moves not in (frozenset({ADD}), frozenset({ADD, DELETE})):
        raise ValueError("moves must be {'add'} or {'add', 'delete'}")
    return moves


def _notion(moves: frozenset) -> str:
    return "toggle" if DELETE in moves else "add"


def _step(net: Network, v: int, state: ServingState, moves, mode: str):
    mv = best_move(net, v, moves, mode, state)
    if mv is None:
        return None
    kind, target, delta = mv
    if kind == ADD:
        apply_add(net.params, net.grid, state, target)
    else:
        apply_delete(net.params, net.grid, state, target)
    return mv


def stabilize(
    net: Network,
    moves=("add", "delete"),
    schedule: str = "round-robin",
    max_rounds: int | None = None,
    seed: int = 0,
    mode: str = "pruned",
    threads: int = 1,
):
    """Let every agent apply its best improving move, round after round,
    until a full round passes without a move.

    Returns ``(network, log, certificate)``.  When ``max_rounds`` runs out
    first the certificate is computed on the truncated network as is and
    carries ``truncated=True``.
    """
    moves = _normalise_moves(moves)
    if schedule not in ("round-robin", "random"):
        raise ValueError(f"unknown schedule {schedule!r}")
    n = net.population
    max_rounds = default_max_rounds(n) if max_rounds is None else int(max_rounds)
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    rng = np.random.default_rng(seed)
    net = net.copy()
    states: dict[int, ServingState] = {}
    log = MoveLog()

    def visit(v):
        if v not in states:
            states[v] = _state(net, v)
        return _step(net, v, states[v], moves, mode)

    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    converged = False
    rnd = 0
    try:
        for rnd in range(1, max_rounds + 1):
            order = np.arange(n) if schedule == "round-robin" else rng.permutation(n)
            # agents' costs are independent, so a round can run in parallel
            outcomes = list(pool.map(visit, map(int, order))) if pool else [visit(int(v)) for v in order]
            moved = False
            for v, mv in zip(order, outcomes):
                if mv is None:
                    continue
                moved = True
                net.links[int(v)] = states[int(v)].links.copy()
                log.append(Move(rnd, int(v), mv[0], mv[1], mv[2]))
            if not moved:
                converged = True
                break
    finally:
        if pool:
            pool.shutdown()
    cert = certify(net, _notion(moves), threads=threads)
    cert.truncated = not converged
    cert.rounds = rnd
    return net, log, cert


def _agent_verdict(net: Network, v: int):
    """Exhaustive check of one agent: (add_ok, toggle_ok, worst_add, worst_any)."""
    p, g = net.params, net.grid
    state = _state(net, v)
    cands = np.flatnonzero(state.candidate_mask())
    add = None
    if cands.size:
        deltas = link_costs(p, g, v, cands) - add_gains(p, g, state, cands, kernel="dense")
        add = _pick(cands, deltas)
    drop = None
    if state.links.size:
        drop = _pick(state.links, delete_deltas(p, g, state, kernel="dense"))
    worst_add = None if add is None else (ADD, add[0], add[1])
    worst_any = worst_add
    if drop is not None and (add is None or drop[1] <= add[1] + _tie_eps(add[1])):
        worst_any = (DELETE, drop[0], drop[1])
    return add is None, add is None and drop is None, worst_add, worst_any


def certify(net: Network, notion: str = "toggle", threads: int = 1, use_symmetry: bool = True) -> StabilityCertificate:
    """Exhaustive stability check of every agent under ``notion``.

    With uniform weights and a translation-invariant network every agent's
    cost landscape is a shifted copy of agent 0's, so agent 0 is checked
    exhaustively and its verdict is carried to the rest.
    """
    if notion not in ("add", "toggle"):
        raise ValueError(f"unknown stability notion {notion!r}")
    n = net.population
    g = net.grid
    symmetric = use_symmetry and net.params.uniform and net.is_translation_invariant()
    agents = [0] if symmetric else list(range(n))
    if threads > 1 and len(agents) > 1:
        with ThreadPoolExecutor(threads) as pool:
            verdicts = list(pool.map(lambda v: _agent_verdict(net, v), agents))
    else:
        verdicts = [_agent_verdict(net, v) for v in agents]
    if symmetric:
        add_ok, toggle_ok, wa, wt = verdicts[0]
        add_stable = np.full(n, add_ok)
        toggle_stable = np.full(n, toggle_ok)
        worst = wt if notion == "toggle" else wa
        violations = {}
        if worst is not None:
            shifted = (g.coordinates[worst[1]] + g.coordinates) % g.side
            targets = np.asarray(g.node_id(shifted))
            violations = {v: (worst[0], int(targets[v]), worst[2]) for v in range(n)}
    else:
        add_stable = np.array([x[0] for x in verdicts])
        toggle_stable = np.array([x[1] for x in verdicts])
        pick = 3 if notion == "toggle" else 2
        violations = {v: x[pick] for v, x in zip(agents, verdicts) if x[pick] is not None}
    return StabilityCertificate(notion, add_stable, toggle_stable, violations, by_symmetry=symmetric)


def canonical_stabilize(net: Network, moves=("add", "delete"), mode: str = "pruned", max_moves: int | None = None):
    """Stabilise agent 0 alone, then give every agent the shifted link set.

    Agents' costs do not interact and the torus looks the same from every
    node, so the result is stable whenever agent 0 is.  Returns
    ``(network, log, certificate)``; the log holds agent 0's moves with the
    round each would occur in under round-robin :func:`stabilize`.
    """
    if not net.params.uniform:
        raise UnsupportedModeError("canonical stabilisation needs uniform weights")
    moves = _normalise_moves(moves)
    g = net.grid
    max_moves = 20 * g.population + 100 if max_moves is None else int(max_moves)
    state = _state(net, 0)
    log = MoveLog()
    converged = False
    for rnd in range(1, max_moves + 1):
        mv = _step(net, 0, state, moves, mode)
        if mv is None:
            converged = True
            break
        log.append(Move(rnd, 0, mv[0], mv[1], mv[2]))
    base = state.links
    if base.size:
        out = Network(g, net.params, list(_translated_link_matrix(g, base)))
    else:
        out = Network(g, net.params)
    cert = certify(out, _notion(moves))
    cert.truncated = not converged
    cert.rounds = len(log) + 1 if converged else len(log)
    return out, log, cert
