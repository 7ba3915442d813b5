"""``smallworld`` command-line driver.

Subcommands::

    build      initialise a network and write a snapshot
    stabilize  run improving-move dynamics, write snapshot, move log, certificate
    route      greedy routing statistics (all pairs or seeded samples)
    verify     stability certificates and audit measurements
    sweep      regime sweeps with growth fits (``--preset acceptance`` for the full table)

Exit codes: 0 success, 1 ``stabilize`` truncated or a ``verify`` check
failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cost import CostParams
from .dynamics import (
    INITIALIZERS,
    Network,
    UnsupportedModeError,
    canonical_stabilize,
    certify,
    default_beta,
    initial_network,
    stabilize,
)
from .grid import GridSpec
from .io import (
    FormatVersionError,
    jsonable,
    parse_weights_ref,
    read_snapshot,
    write_json,
    write_move_log,
    write_route_dump,
    write_snapshot,
)
from .metrics import (
    DEFAULT_SIDES,
    SweepConfig,
    acceptance_preset,
    ball_link_audit,
    degree_stats,
    run_sweeps,
    travel_bound_constant,
)
from .routing import EXACT_CAP, route, route_many, routing_diameter

CHECKS = ("add-stability", "toggle-stability", "travel", "ball")


class CliError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _shared() -> argparse.ArgumentParser:
    sh = argparse.ArgumentParser(add_help=False)
    sh.add_argument("--d", type=int, help="grid dimension")
    sh.add_argument("--side", type=int, help="grid side length m (n = m**d)")
    sh.add_argument("--alpha", type=float, help="link-cost exponent")
    sh.add_argument("--beta", type=float, help="link-cost multiplier (default 0.5 for d=1, 0.1 otherwise)")
    sh.add_argument("--seed", type=int, default=0, help="seed for numpy's PCG64 generator (default 0)")
    sh.add_argument("--threads", type=int, default=1, help="worker cap; outputs do not depend on it")
    sh.add_argument("--out", help="output path (directory for sweep)")
    return sh


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smallworld", description="Small-world network formation on tori.")
    sub = parser.add_subparsers(dest="command", required=True)
    sh = _shared()

    b = sub.add_parser("build", parents=[sh], help="initialise a network snapshot")
    b.add_argument("--init", default="empty", choices=INITIALIZERS)
    b.add_argument("--weights", default="uniform", help="uniform | proximity:<gamma> | path to v,u,weight CSV")

    s = sub.add_parser("stabilize", parents=[sh], help="run improving-move dynamics")
    s.add_argument("--in", dest="inp", required=True, help="input snapshot")
    s.add_argument("--moves", default="toggle", choices=("add", "toggle"))
    s.add_argument("--schedule", default="round-robin", choices=("round-robin", "random"))
    s.add_argument("--max-rounds", type=int)
    s.add_argument("--mode", default="per-agent", choices=("per-agent", "canonical"))
    s.add_argument("--search", default="pruned", choices=("pruned", "exact"))
    s.add_argument("--log", help="move log CSV (default: <out>.moves.csv)")
    s.add_argument("--cert", help="certificate JSON (default: <out>.cert.json)")

    r = sub.add_parser("route", parents=[sh], help="greedy routing statistics")
    r.add_argument("--in", dest="inp", required=True)
    grp = r.add_mutually_exclusive_group()
    grp.add_argument("--all-pairs", action="store_true", help=f"every ordered pair (n <= {EXACT_CAP})")
    grp.add_argument("--samples", type=int, help="number of seeded random pairs")
    r.add_argument("--hop-limit", type=int)
    r.add_argument("--dump", help="per-route CSV")
    r.add_argument("--paths", action="store_true", help="add full paths to the dump")

    v = sub.add_parser("verify", parents=[sh], help="certificates and audit measurements")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--checks", default="toggle-stability", help=f"comma list from {','.join(CHECKS)}")
    v.add_argument("--epsilon", type=float, default=0.25)
    v.add_argument("--travel-max", type=float, help="fail when travel_c exceeds this")
    v.add_argument("--ball-max", type=int, help="fail when ball_c exceeds this")
    v.add_argument("--samples", type=int, default=32, help="agents sampled by the audits on large grids")

    w = sub.add_parser("sweep", parents=[sh], help="regime sweep with growth fits")
    w.add_argument("--preset", choices=("acceptance",))
    w.add_argument("--sides", type=_ints)
    w.add_argument("--alphas", type=_floats)
    w.add_argument("--betas", type=_floats)
    w.add_argument("--seeds", type=_ints)
    w.add_argument("--notion", default="toggle", choices=("add", "toggle"))
    w.add_argument("--init", default="kleinberg", choices=INITIALIZERS)
    w.add_argument("--mode", default="canonical", choices=("canonical", "per-agent"))
    w.add_argument("--route-samples", type=int, default=20000)
    w.add_argument("--timing", action="store_true", help="fill runtime_ms (makes output non-reproducible)")
    return parser


def _override_params(net: Network, args) -> Network:
    g = net.grid
    if args.d is not None and args.d != g.dimension:
        raise CliError(f"--d {args.d} does not match the snapshot (d = {g.dimension})")
    if args.side is not None and args.side != g.side:
        raise CliError(f"--side {args.side} does not match the snapshot (side = {g.side})")
    if args.alpha is None and args.beta is None:
        return net
    p = net.params
    p = CostParams(p.alpha if args.alpha is None else args.alpha, p.beta if args.beta is None else args.beta, p.weights)
    out = net.copy()
    out.params = p
    return out


def _require_out(args) -> Path:
    if not args.out:
        raise CliError("--out is required")
    return Path(args.out)


def cmd_build(args) -> int:
    if args.d is None or args.side is None or args.alpha is None:
        raise CliError("build needs --d, --side and --alpha")
    out = _require_out(args)
    g = GridSpec(args.d, args.side)
    beta = default_beta(args.d) if args.beta is None else args.beta
    p = CostParams(args.alpha, beta, parse_weights_ref(args.weights))
    net = initial_network(g, p, args.init, args.seed)
    write_snapshot(out, net, {"init": args.init, "seed": args.seed, "schedule": None, "moves": None, "rounds": 0})
    return 0


def cmd_stabilize(args) -> int:
    out = _require_out(args)
    net, prov = read_snapshot(args.inp)
    net = _override_params(net, args)
    moves = ("add",) if args.moves == "add" else ("add", "delete")
    if args.mode == "canonical":
        if args.max_rounds is not None:
            raise CliError("--max-rounds applies to --mode per-agent only")
        net, log, cert = canonical_stabilize(net, moves, mode=args.search)
    else:
        net, log, cert = stabilize(
            net, moves, args.schedule, args.max_rounds, args.seed, args.search, threads=args.threads
        )
    provenance = {
        "seed": args.seed,
        "schedule": args.schedule if args.mode == "per-agent" else "canonical",
        "moves": args.moves,
        "rounds": cert.rounds,
        "search": args.search,
        "move_count": len(log),
        "truncated": cert.truncated,
        "parent": prov,
    }
    write_snapshot(out, net, provenance)
    write_move_log(args.log or out.with_suffix(".moves.csv"), log)
    write_json(args.cert or out.with_suffix(".cert.json"), jsonable({**cert.to_dict(), "provenance": provenance}))
    return 1 if cert.truncated else 0


def cmd_route(args) -> int:
    out = _require_out(args)
    net, prov = read_snapshot(args.inp)
    net = _override_params(net, args)
    n = net.population
    exact = args.all_pairs or (args.samples is None and n <= EXACT_CAP)
    if exact:
        stats = routing_diameter(net, "exact", hop_limit=args.hop_limit)
    else:
        stats = routing_diameter(net, "sampled", args.samples or 10000, args.seed, hop_limit=args.hop_limit)
    doc = {**stats.to_dict(), "n": n, "provenance": {"seed": args.seed, "hop_limit": args.hop_limit, "parent": prov}}
    write_json(out, jsonable(doc))
    if args.dump:
        if exact:
            src, dst = np.repeat(np.arange(n), n), np.tile(np.arange(n), n)
        else:
            rng = np.random.default_rng(args.seed)
            src = rng.integers(0, n, size=args.samples or 10000)
            dst = rng.integers(0, n, size=args.samples or 10000)
        hops, codes = route_many(net, src, dst, args.hop_limit)
        paths = [route(net, int(s), int(t), args.hop_limit).path for s, t in zip(src, dst)] if args.paths else None
        write_route_dump(args.dump, src, dst, hops, codes, paths)
    return 0


def cmd_verify(args) -> int:
    out = _require_out(args)
    net, prov = read_snapshot(args.inp)
    net = _override_params(net, args)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = sorted(set(checks) - set(CHECKS))
    if unknown:
        raise CliError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    doc: dict = {"checks": {}, "provenance": {"seed": args.seed, "parent": prov}}
    failed = False
    stab = [c for c in checks if c.endswith("-stability")]
    if stab:
        notion = "toggle" if "toggle-stability" in stab else "add"
        cert = certify(net, notion, threads=args.threads)
        if "add-stability" in stab:
            doc["checks"]["add-stability"] = {"pass": cert.all_add_stable, "unstable_agents": int((~cert.add_stable).sum())}
            failed |= not cert.all_add_stable
        if "toggle-stability" in stab:
            doc["checks"]["toggle-stability"] = {"pass": cert.all_toggle_stable, "certificate": cert.to_dict()}
            failed |= not cert.all_toggle_stable
    if "travel" in checks:
        value = travel_bound_constant(net, samples=args.samples, seed=args.seed)
        ok = args.travel_max is None or value <= args.travel_max
        doc["checks"]["travel"] = {"travel_c": value, "max": args.travel_max, "pass": ok}
        failed |= not ok
    if "ball" in checks:
        value = ball_link_audit(net, args.epsilon, samples=args.samples, seed=args.seed)
        ok = args.ball_max is None or value <= args.ball_max
        doc["checks"]["ball"] = {"ball_c": value, "epsilon": args.epsilon, "max": args.ball_max, "pass": ok}
        failed |= not ok
    ds = degree_stats(net)
    doc["degree"] = {"max": ds.max_degree, "mean": ds.mean_degree, "histogram": ds.histogram}
    doc["pass"] = not failed
    write_json(out, jsonable(doc))
    return 1 if failed else 0


def _sweep_configs(args) -> list[SweepConfig]:
    if args.preset == "acceptance":
        cfgs = acceptance_preset(args.seeds or (0, 1, 2))
    else:
        d = args.d or 1
        sides = args.sides or ((args.side,) if args.side else DEFAULT_SIDES.get(d, DEFAULT_SIDES[2]))
        alphas = args.alphas or ((args.alpha,) if args.alpha is not None else (float(d + 1),))
        betas = args.betas or ((args.beta,) if args.beta is not None else None)
        seeds = args.seeds or (args.seed,)
        cfgs = [SweepConfig(d=d, sides=sides, alphas=alphas, betas=betas, notion=args.notion, seeds=seeds)]
    return [
        replace(c, init=args.init, mode=args.mode, route_samples=args.route_samples, record_timing=args.timing)
        for c in cfgs
    ]


def cmd_sweep(args) -> int:
    out = _require_out(args)
    cfgs = _sweep_configs(args)
    for c in cfgs:
        for side in c.sides:
            GridSpec(c.d, side)
    out.mkdir(parents=True, exist_ok=True)
    report = run_sweeps(cfgs, threads=args.threads, label=args.preset or "sweep")
    report.write_csv(out / "report.csv")
    summary = {
        **report.summary(),
        "configs": [
            {k: v for k, v in vars(c).items() if k != "record_timing"} for c in cfgs
        ],
    }
    write_json(out / "summary.json", jsonable(summary))
    return 0


COMMANDS = {
    "build": cmd_build,
    "stabilize": cmd_stabilize,
    "route": cmd_route,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except (CliError, FormatVersionError, UnsupportedModeError, ValueError, OSError) as exc:
        print(f"smallworld {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
