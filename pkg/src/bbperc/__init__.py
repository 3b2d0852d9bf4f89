"""Lattice random-walk bridges and conditioned subcritical percolation clusters.

Exact rational computations at small sizes and seeded Monte Carlo at desk scale,
with statistical checks against Brownian-bridge predictions.
"""
from .bridge import (
    BridgePath,
    BridgeTables,
    ScaledPath,
    covariance_prediction,
    estimate_Cn,
    exact_bridge_law,
    interpolate_scale,
    local_clt_distance,
    pinning_time_distribution,
    sample_bridge,
    sample_bridges,
    sample_free_pinned_bridge,
    skeleton_scale,
    time_deviation,
)
from .lattice_walk import (
    BasisFrame,
    StepLaw,
    lattice_covolume,
    load_law,
    mean_decompose,
    named_law,
    solve_tilt,
    span,
    tilt,
    validate_step_law,
)

__version__ = "0.1.0"

__all__ = [
    "BasisFrame",
    "BridgePath",
    "BridgeTables",
    "ScaledPath",
    "StepLaw",
    "covariance_prediction",
    "estimate_Cn",
    "exact_bridge_law",
    "interpolate_scale",
    "lattice_covolume",
    "load_law",
    "local_clt_distance",
    "mean_decompose",
    "named_law",
    "pinning_time_distribution",
    "sample_bridge",
    "sample_bridges",
    "sample_free_pinned_bridge",
    "skeleton_scale",
    "solve_tilt",
    "span",
    "tilt",
    "time_deviation",
    "validate_step_law",
]
