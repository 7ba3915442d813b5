"""Brute-force reference implementations for small instances.

Nothing here reuses the production kernels: distances are recomputed from
coordinates with plain Python loops, every cost is a full double sum, and
every stability verdict enumerates every single-link move.
"""
from __future__ import annotations

from fractions import Fraction

__all__ = [
    "OracleSizeError",
    "oracle_distance",
    "oracle_separation",
    "oracle_total_cost",
    "oracle_stability",
    "oracle_exact_arith_check",
    "float_agrees",
]

TOTAL_COST_CAP = 4096
STABILITY_CAP = 256
EXACT_CAP = 256
_TOL = 1e-9


class OracleSizeError(ValueError):
    pass


def _coords(u: int, d: int, m: int) -> list[int]:
    out = []
    for _ in range(d):
        u, r = divmod(u, m)
        out.append(r)
    return out[::-1]


def oracle_distance(d: int, m: int, u: int, v: int) -> int:
    total = 0
    for a, b in zip(_coords(u, d, m), _coords(v, d, m)):
        gap = abs(a - b)
        total += min(gap, m - gap)
    return total


def _guard(g, cap):
    if g.population > cap:
        raise OracleSizeError(f"oracle limited to n <= {cap}, got n = {g.population}")


def _weights(p, g, v):
    if p.weights is None:
        return [1] * g.population
    return [float(w) for w in p.weights.row(g, v)]


def _table(g):
    d, m, n = g.dimension, g.side, g.population
    return [[oracle_distance(d, m, u, v) for v in range(n)] for u in range(n)]


def _cost(p, table, weights, v, links):
    serving = list(links) + [v]
    sep = 0
    for u, row in enumerate(table):
        if u == v or u in links:
            continue
        sep += weights[u] * min(row[s] for s in serving)
    return sum(p.beta * float(table[v][u]) ** p.alpha for u in links) + sep


def oracle_separation(p, g, v: int, links) -> float:
    d, m, n = g.dimension, g.side, g.population
    weights = _weights(p, g, v)
    serving = set(int(x) for x in links) | {int(v)}
    total = 0
    for u in range(n):
        if u in serving:
            continue
        total += weights[u] * min(oracle_distance(d, m, u, s) for s in serving)
    return total


def oracle_total_cost(p, g, v: int, links) -> float:
    """Cost of agent ``v`` holding ``links``, by direct summation."""
    _guard(g, TOTAL_COST_CAP)
    links = set(int(x) for x in links)
    if v in links:
        raise ValueError("self-links are not allowed")
    d, m = g.dimension, g.side
    link_part = sum(p.beta * float(oracle_distance(d, m, v, u)) ** p.alpha for u in links)
    return link_part + oracle_separation(p, g, v, links)


def oracle_stability(p, g, net, notion: str = "toggle") -> list[bool]:
    """Per-agent ground truth: try every single add (and delete) move.

    Each candidate cost is a full re-evaluation; only the pairwise distance
    table is shared between evaluations.
    """
    _guard(g, STABILITY_CAP)
    if notion not in ("add", "toggle"):
        raise ValueError(f"unknown stability notion {notion!r}")
    n = g.population
    table = _table(g)
    flags = []
    for v in range(n):
        weights = _weights(p, g, v)
        links = set(int(x) for x in net.links[v])
        base = _cost(p, table, weights, v, links)
        ok = all(
            _cost(p, table, weights, v, links | {u}) - base >= -_TOL
            for u in range(n)
            if u != v and u not in links
        )
        if ok and notion == "toggle":
            ok = all(_cost(p, table, weights, v, links - {u}) - base >= -_TOL for u in links)
        flags.append(ok)
    return flags


def oracle_exact_arith_check(p, g, v: int, links, beta: Fraction | None = None) -> Fraction:
    """Cost in exact rational arithmetic (integer ``alpha``, uniform weights).

    ``beta`` defaults to the exact binary value of ``p.beta``.
    """
    _guard(g, EXACT_CAP)
    if float(p.alpha) != int(p.alpha):
        raise ValueError("exact arithmetic needs an integer alpha")
    if p.weights is not None:
        raise ValueError("exact arithmetic supports uniform weights only")
    alpha = int(p.alpha)
    beta = Fraction(p.beta) if beta is None else Fraction(beta)
    d, m, n = g.dimension, g.side, g.population
    links = set(int(x) for x in links)
    serving = links | {int(v)}
    link_part = sum(Fraction(oracle_distance(d, m, v, u)) ** alpha for u in links) * beta
    sep = 0
    for u in range(n):
        if u not in serving:
            sep += min(oracle_distance(d, m, u, s) for s in serving)
    return link_part + sep


def float_agrees(value: float, exact: Fraction, rel: float = 1e-6) -> bool:
    """True when a double-precision cost agrees with the exact one."""
    return abs(Fraction(value) - exact) <= rel * max(abs(exact), 1)
