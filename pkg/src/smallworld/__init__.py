"""Small-world network formation on d-dimensional tori.

Agents pay ``beta * d**alpha`` per out-link plus the weighted distance from
every node to its nearest link; improving single-link moves drive the
network to stability, after which greedy routing is fast.
"""
from .cost import CostParams, ProximityWeights, TableWeights, add_delta, delete_delta, total_cost
from .dynamics import (
    Network,
    StabilityCertificate,
    canonical_stabilize,
    certify,
    initial_network,
    stabilize,
)
from .grid import GridSpec, ball, grid_distance, sphere
from .metrics import (
    SweepConfig,
    ball_link_audit,
    conjecture_probe,
    degree_stats,
    fit_growth,
    regime_sweep,
    travel_bound_constant,
)
from .routing import route, routing_diameter

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "grid_distance",
    "sphere",
    "ball",
    "CostParams",
    "ProximityWeights",
    "TableWeights",
    "total_cost",
    "add_delta",
    "delete_delta",
    "Network",
    "StabilityCertificate",
    "initial_network",
    "stabilize",
    "canonical_stabilize",
    "certify",
    "route",
    "routing_diameter",
    "degree_stats",
    "travel_bound_constant",
    "ball_link_audit",
    "fit_growth",
    "SweepConfig",
    "regime_sweep",
    "conjecture_probe",
]
