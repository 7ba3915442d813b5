"""Degree and routing measurements, audits, growth fits and sweeps."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .cost import CostParams
from .dynamics import Network, canonical_stabilize, default_beta, initial_network, stabilize
from .grid import GridSpec, distances_from, multi_source_distances, pairwise_distances
from .oracle import oracle_distance, oracle_separation
from .routing import progress_profile, routing_diameter

__all__ = [
    "REPORT_COLUMNS",
    "DegreeStats",
    "degree_stats",
    "travel_bound_constant",
    "ball_link_audit",
    "separation_drop_check",
    "greedy_progress_violations",
    "fit_growth",
    "band_ratio",
    "SweepConfig",
    "ExperimentReport",
    "run_configuration",
    "regime_sweep",
    "run_sweeps",
    "acceptance_preset",
    "conjecture_probe",
    "DEFAULT_SIDES",
]

REPORT_COLUMNS = (
    "d", "side", "n", "alpha", "beta", "notion", "seed", "max_degree", "mean_degree",
    "max_hops", "mean_hops", "stuck", "travel_c", "ball_c", "rounds", "truncated",
    "runtime_ms", "certified",
)

DEFAULT_SIDES = {1: (256, 1024, 4096, 16384), 2: (8, 16, 32, 64)}

AUDIT_EXACT_CAP = 512


@dataclass(frozen=True)
class DegreeStats:
    max_degree: int
    mean_degree: float
    histogram: dict


def degree_stats(net: Network) -> DegreeStats:
    deg = net.degrees()
    values, counts = np.unique(deg, return_counts=True)
    return DegreeStats(int(deg.max(initial=0)), float(deg.mean()), {int(v): int(c) for v, c in zip(values, counts)})


def _audit_agents(net: Network, exact_cap: int, samples: int, seed: int) -> list[int]:
    # a translation-invariant network looks the same from every agent
    if net.is_translation_invariant():
        return [0]
    n = net.population
    if n <= exact_cap:
        return list(range(n))
    rng = np.random.default_rng(seed)
    return sorted(int(v) for v in rng.choice(n, size=min(samples, n), replace=False))


def travel_bound_constant(net: Network, exact_cap: int = AUDIT_EXACT_CAP, samples: int = 32, seed: int = 0) -> float:
    """Largest ``d(u, N(v)+{v}) / max(1, d(v,u)**(alpha/(d+1)))`` over agents
    ``v`` and nodes ``u != v``.

    Bounded independently of n on add-stable networks when the travel bound
    holds.  Every agent is examined when ``n <= exact_cap`` (or when the
    network is translation-invariant, where agent 0 speaks for all);
    otherwise ``samples`` agents are drawn with ``seed``.
    """
    g = net.grid
    power = net.params.alpha / (g.dimension + 1)
    worst = 0.0
    for v in _audit_agents(net, exact_cap, samples, seed):
        served = multi_source_distances(g, np.append(net.links[v], v))
        scale = np.maximum(1.0, distances_from(g, v).astype(float) ** power)
        scale[v] = np.inf
        worst = max(worst, float((served / scale).max()))
    return worst


def ball_link_audit(
    net: Network, epsilon: float = 0.25, exact_cap: int = AUDIT_EXACT_CAP, samples: int = 32, seed: int = 0
) -> int:
    """Most links any agent ``v`` holds inside one ball ``B(u, r)`` with
    ``r = floor(epsilon * d(v,u)**(alpha/(d+1)))``, over all ``u != v``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    g = net.grid
    power = net.params.alpha / (g.dimension + 1)
    everyone = np.arange(g.population)
    worst = 0
    for v in _audit_agents(net, exact_cap, samples, seed):
        links = net.links[v]
        if links.size == 0:
            continue
        radius = np.floor(epsilon * distances_from(g, v).astype(float) ** power)
        inside = np.zeros(g.population, dtype=np.int64)
        step = max(1, (1 << 22) // g.population)
        for i in range(0, len(links), step):
            inside += (pairwise_distances(g, links[i:i + step], everyone) <= radius[None, :]).sum(axis=0)
        inside[v] = 0
        worst = max(worst, int(inside.max()))
    return worst


@dataclass(frozen=True)
class SeparationDropSample:
    agent: int
    target: int
    radius: int
    drop: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.drop >= self.bound


def separation_drop_check(net: Network, samples: int = 100, seed: int = 0, max_tries: int = 100000) -> list[SeparationDropSample]:
    """Sample ``(v, u, l)`` with no member of ``N(v)+{v}`` inside ``B(u, l)``
    and measure, in exact arithmetic, how much adding ``u`` lowers ``v``'s
    separation; the drop should be at least ``(l/3)**(d+1)``."""
    g = net.grid
    if g.population > 256:
        raise ValueError("exact separation-drop checks are limited to n <= 256")
    uniform = CostParams(net.params.alpha, net.params.beta)
    rng = np.random.default_rng(seed)
    d, m, n = g.dimension, g.side, g.population
    out: list[SeparationDropSample] = []
    for _ in range(max_tries):
        if len(out) >= samples:
            break
        v, u = (int(x) for x in rng.integers(0, n, size=2))
        links = [int(x) for x in net.links[v]]
        if u == v or u in links:
            continue
        gap = min(oracle_distance(d, m, u, s) for s in links + [v])
        if gap < 2:
            continue
        # any l below the gap leaves B(u, l) free of serving nodes
        radius = int(rng.integers(1, gap))
        # uniform weights keep both separations exact integers
        drop = oracle_separation(uniform, g, v, links) - oracle_separation(uniform, g, v, links + [u])
        out.append(SeparationDropSample(v, u, radius, Fraction(drop), Fraction(radius, 3) ** (d + 1)))
    return out


def greedy_progress_violations(net: Network, pairs: int = 200, seed: int = 0) -> int:
    """Number of sampled routes whose distance-to-target is not strictly
    decreasing from hop to hop."""
    rng = np.random.default_rng(seed)
    n = net.population
    bad = 0
    for s, t in rng.integers(0, n, size=(pairs, 2)):
        prof = progress_profile(net, int(s), int(t))
        if any(b >= a for a, b in zip(prof, prof[1:])):
            bad += 1
    return bad


_MODELS = ("log", "loglog", "poly")


def fit_growth(ns, ys, models=_MODELS, min_exponent: float | None = None) -> dict:
    """Least-squares fits of ``y`` against ``n``.

    ``log``: ``y = c * log2 n``; ``loglog``: ``y = c * log2 log2 n``;
    ``poly``: ``y = c * n**gamma`` (fitted in log space, optionally with
    ``gamma >= min_exponent``).  Each model reports its parameters and its
    residual sum of squares in ``y``; ``best`` names the smallest residual.
    """
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ns.size != ys.size or ns.size < 2:
        raise ValueError("need at least two (n, y) points")
    out: dict = {}
    for name in models:
        if name in ("log", "loglog"):
            f = np.log2(ns) if name == "log" else np.log2(np.log2(ns))
            c = float(np.dot(f, ys) / np.dot(f, f))
            out[name] = {"c": c, "ssr": float(((ys - c * f) ** 2).sum())}
        elif name == "poly":
            if np.any(ys <= 0):
                continue
            gamma, logc = np.polyfit(np.log(ns), np.log(ys), 1)
            if min_exponent is not None and gamma < min_exponent:
                gamma = min_exponent
                logc = float(np.mean(np.log(ys) - gamma * np.log(ns)))
            pred = np.exp(logc) * ns ** gamma
            out[name] = {"c": float(np.exp(logc)), "gamma": float(gamma), "ssr": float(((ys - pred) ** 2).sum())}
        else:
            raise ValueError(f"unknown growth model {name!r}")
    out["best"] = min((k for k in out), key=lambda k: out[k]["ssr"])
    return out


def band_ratio(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0 or values.min() <= 0:
        return math.inf
    return float(values.max() / values.min())


@dataclass(frozen=True)
class SweepConfig:
    d: int = 1
    sides: tuple = (256, 1024, 4096, 16384)
    alphas: tuple = (2.0,)
    betas: tuple | None = None
    notion: str = "toggle"
    seeds: tuple = (0, 1, 2)
    init: str = "kleinberg"
    mode: str = "canonical"
    search: str = "pruned"
    route_exact_cap: int = 1024
    route_samples: int = 20000
    audit_samples: int = 32
    epsilon: float = 0.25
    record_timing: bool = False

    def jobs(self):
        betas = self.betas or (default_beta(self.d),)
        for alpha in self.alphas:
            for beta in betas:
                for side in self.sides:
                    for seed in self.seeds:
                        yield (self, side, float(alpha), float(beta), int(seed))


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    networks: dict = field(default_factory=dict)
    label: str = "sweep"

    def csv_lines(self) -> list[str]:
        lines = [",".join(REPORT_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in REPORT_COLUMNS))
        return lines

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")

    def summary(self) -> dict:
        return {"label": self.label, "fits": self.fits, "rows": len(self.rows)}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_configuration(cfg: SweepConfig, side: int, alpha: float, beta: float, seed: int, keep_network: bool = False):
    """Stabilise and measure one (grid, alpha, beta, seed) configuration."""
    start = time.perf_counter()
    g = GridSpec(cfg.d, side)
    p = CostParams(alpha, beta)
    moves = ("add",) if cfg.notion == "add" else ("add", "delete")
    net0 = initial_network(g, p, cfg.init, seed)
    if cfg.mode == "canonical":
        net, _log, cert = canonical_stabilize(net0, moves, mode=cfg.search)
    elif cfg.mode == "per-agent":
        net, _log, cert = stabilize(net0, moves, seed=seed, mode=cfg.search)
    else:
        raise ValueError(f"unknown stabilisation mode {cfg.mode!r}")
    deg = degree_stats(net)
    if g.population <= cfg.route_exact_cap:
        rs = routing_diameter(net, "exact", exact_cap=cfg.route_exact_cap)
    else:
        rs = routing_diameter(net, "sampled", cfg.route_samples, seed)
    row = {
        "d": cfg.d,
        "side": side,
        "n": g.population,
        "alpha": alpha,
        "beta": beta,
        "notion": cfg.notion,
        "seed": seed,
        "max_degree": deg.max_degree,
        "mean_degree": deg.mean_degree,
        "max_hops": rs.max_hops,
        "mean_hops": rs.mean_hops,
        "stuck": rs.stuck_count,
        "travel_c": travel_bound_constant(net, samples=cfg.audit_samples, seed=seed),
        "ball_c": ball_link_audit(net, cfg.epsilon, samples=cfg.audit_samples, seed=seed),
        "rounds": cert.rounds,
        "truncated": cert.truncated,
        "runtime_ms": None,
        "certified": cert.stable,
    }
    if cfg.record_timing:
        row["runtime_ms"] = int(round(1000 * (time.perf_counter() - start)))
    return (row, net) if keep_network else (row, None)


def _run_job(job):
    cfg, side, alpha, beta, seed = job
    return run_configuration(cfg, side, alpha, beta, seed)


def _group_fits(rows: list[dict]) -> dict:
    fits = {}
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["d"], row["alpha"], row["beta"], row["notion"]), []).append(row)
    for (d, alpha, beta, notion), grp in sorted(groups.items()):
        ns = [r["n"] for r in grp]
        entry = {
            "d": d,
            "alpha": alpha,
            "beta": beta,
            "notion": notion,
            "regime": _regime(d, alpha),
            "sizes": sorted(set(ns)),
            "all_certified": all(r["certified"] for r in grp),
            "any_truncated": any(r["truncated"] for r in grp),
            "stuck_total": sum(r["stuck"] for r in grp),
            "degree_per_log2n_band": band_ratio([r["max_degree"] / math.log2(r["n"]) for r in grp]),
            "hops_per_log2n_band": band_ratio([r["max_hops"] / math.log2(r["n"]) for r in grp]),
            "max_degree_band": band_ratio([r["max_degree"] for r in grp]),
            "travel_c_band": band_ratio([r["travel_c"] for r in grp]),
            "ball_c_band": band_ratio([r["ball_c"] for r in grp]),
        }
        if len(set(ns)) >= 2:
            entry["max_degree_fit"] = fit_growth(ns, [r["max_degree"] for r in grp])
            entry["max_hops_fit"] = fit_growth(ns, [r["max_hops"] for r in grp])
            entry["max_hops_fit_gamma_ge_0.1"] = fit_growth(ns, [r["max_hops"] for r in grp], min_exponent=0.1)
        fits[f"d={d},alpha={alpha!r},beta={beta!r},{notion}"] = entry
    return fits


def _regime(d: int, alpha: float) -> str:
    if alpha < d + 1:
        return "alpha<d+1"
    if alpha == d + 1:
        return "alpha=d+1"
    return "alpha>d+1"


def regime_sweep(cfg: SweepConfig, threads: int = 1, keep_networks: bool = False, label: str = "sweep") -> ExperimentReport:
    """Run every configuration of ``cfg`` and fit growth laws per regime.

    Configurations are independent; with ``threads > 1`` they run in worker
    processes.  Rows come back in job order whatever the worker count.
    """
    return run_sweeps([cfg], threads, keep_networks, label)


def run_sweeps(cfgs, threads: int = 1, keep_networks: bool = False, label: str = "sweep") -> ExperimentReport:
    """Like :func:`regime_sweep` over several configurations at once, sharing
    one worker pool."""
    jobs = [job for cfg in cfgs for job in cfg.jobs()]
    if not jobs:
        raise ValueError("empty parameter grid")
    report = ExperimentReport(label=label)
    if threads > 1 and not keep_networks:
        with ProcessPoolExecutor(threads) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [run_configuration(*job, keep_network=keep_networks) for job in jobs]
    for row, net in results:
        report.rows.append(row)
        if net is not None:
            report.networks[(row["d"], row["side"], row["alpha"], row["beta"], row["seed"])] = net
    report.fits = _group_fits(report.rows)
    return report


def acceptance_preset(seeds=(0, 1, 2)) -> list[SweepConfig]:
    """The three one-dimensional regimes: alpha = 2 (toggle), alpha = 1 (add)
    and alpha = 4 (toggle, three sizes)."""
    seeds = tuple(seeds)
    return [
        SweepConfig(d=1, sides=DEFAULT_SIDES[1], alphas=(2.0,), notion="toggle", seeds=seeds),
        SweepConfig(d=1, sides=DEFAULT_SIDES[1], alphas=(1.0,), notion="add", seeds=seeds),
        SweepConfig(d=1, sides=DEFAULT_SIDES[1][:3], alphas=(4.0,), notion="toggle", seeds=seeds),
    ]


def conjecture_probe(
    d: int = 2,
    alphas=(4.0,),
    sides=(8, 16, 32, 64),
    seeds=(0,),
    beta: float | None = None,
    control: bool = True,
    threads: int = 1,
    **kwargs,
) -> ExperimentReport:
    """Degree growth of toggle-stable networks for ``d >= 2`` and
    ``alpha > d + 1``.  Evidence only: nothing is asserted.  With
    ``control=True`` an ``alpha = d + 1`` series is added for contrast."""
    if d < 2:
        raise ValueError("the probe targets d >= 2")
    alphas = tuple(float(a) for a in alphas)
    if control and float(d + 1) not in alphas:
        alphas = alphas + (float(d + 1),)
    cfg = SweepConfig(
        d=d, sides=tuple(sides), alphas=alphas, betas=None if beta is None else (beta,),
        notion="toggle", seeds=tuple(seeds), **kwargs,
    )
    report = regime_sweep(cfg, threads=threads, label="conjecture_probe (evidence only)")
    return report


def config_dict(cfg: SweepConfig) -> dict:
    return asdict(cfg)
