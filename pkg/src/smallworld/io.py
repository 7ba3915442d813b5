"""File formats: network snapshots, move logs, certificates, route dumps and
sweep reports.

Every writer is deterministic: the same object always produces the same
bytes, so reruns with identical seeds can be compared with ``cmp``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cost import CostParams, ProximityWeights, load_weights_csv
from .dynamics import Move, MoveLog, Network
from .grid import GridSpec
from .routing import outcome_name

__all__ = [
    "FORMAT_VERSION",
    "FormatVersionError",
    "parse_weights_ref",
    "snapshot_dict",
    "write_snapshot",
    "read_snapshot",
    "write_move_log",
    "read_move_log",
    "write_json",
    "write_route_dump",
]

FORMAT_VERSION = "1.0"


class FormatVersionError(ValueError):
    pass


def parse_weights_ref(ref: str | None, base: Path | None = None):
    """``"uniform"``/``None`` -> uniform, ``"proximity:<gamma>"`` -> proximity
    weights, anything else is a ``v,u,weight`` CSV path (relative paths are
    resolved against ``base``)."""
    if ref is None or ref == "uniform":
        return None
    if ref.startswith("proximity:"):
        return ProximityWeights(float(ref.split(":", 1)[1]))
    path = Path(ref)
    if base is not None and not path.is_absolute() and not path.exists():
        path = base / path
    w = load_weights_csv(path)
    w.ref = ref
    return w


def snapshot_dict(net: Network, provenance: dict | None = None) -> dict:
    p = net.params
    return {
        "format_version": FORMAT_VERSION,
        "d": net.grid.dimension,
        "side": net.grid.side,
        "alpha": p.alpha,
        "beta": p.beta,
        "weights_ref": p.weights_ref,
        "links": [[int(u) for u in nbrs] for nbrs in net.links],
        "provenance": dict(provenance or {}),
    }


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(_dumps(obj))


def write_snapshot(path, net: Network, provenance: dict | None = None) -> None:
    """One agent's link list per line keeps large snapshots diff-friendly."""
    doc = snapshot_dict(net, provenance)
    links = doc.pop("links")
    head = json.dumps(doc, sort_keys=True, indent=1, allow_nan=False)
    body = ",\n".join("  " + json.dumps(row, separators=(",", ":")) for row in links)
    text = head[:-2] + ',\n "links": [\n' + body + "\n ]\n}\n"
    Path(path).write_text(text)


def read_snapshot(path) -> tuple[Network, dict]:
    """Load a snapshot, returning ``(network, provenance)``.

    Raises :class:`FormatVersionError` on an unknown major version.
    """
    path = Path(path)
    doc = json.loads(path.read_text())
    version = str(doc.get("format_version", ""))
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise FormatVersionError(f"unsupported snapshot format_version {version!r} (expected {FORMAT_VERSION})")
    g = GridSpec(int(doc["d"]), int(doc["side"]))
    weights = parse_weights_ref(doc.get("weights_ref"), path.parent)
    p = CostParams(float(doc["alpha"]), float(doc["beta"]), weights)
    return Network(g, p, doc["links"]), doc.get("provenance", {})


_LOG_FIELDS = ("round", "agent", "kind", "target", "delta")


def write_move_log(path, log: MoveLog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_LOG_FIELDS)
        for mv in log:
            w.writerow((mv.round, mv.agent, mv.kind, mv.target, repr(float(mv.delta))))


def read_move_log(path) -> MoveLog:
    log = MoveLog()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            log.append(Move(int(row["round"]), int(row["agent"]), row["kind"], int(row["target"]), float(row["delta"])))
    return log


def write_route_dump(path, sources, targets, hops, codes, paths=None) -> None:
    """Route rows ``source,target,hops,outcome`` plus a space-separated
    ``path`` column when ``paths`` is given."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("source", "target", "hops", "outcome") + (("path",) if paths is not None else ()))
        for i, (s, t, h, c) in enumerate(zip(sources, targets, hops, codes)):
            row = [int(s), int(t), int(h), outcome_name(int(c))]
            if paths is not None:
                row.append(" ".join(str(int(x)) for x in paths[i]))
            w.writerow(row)


def jsonable(obj):
    """Convert numpy scalars and tuples so ``json`` accepts them."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj
