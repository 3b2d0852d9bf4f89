"""Subcritical bond percolation on truncated slabs: predicates, regeneration, oracles, sampling."""
from .batch import Batch
from .oracle import (
    ConnectivityTable,
    FactorizationRow,
    RenewalReport,
    all_patterns,
    enumerate_connectivity,
    factorization_rhs,
    sample_connectivity,
    verify_all_factorizations,
    verify_renewal_factorization,
    verify_renewal_relation,
)
from .predicates import (
    ClusterView,
    RegenerationSkeleton,
    cluster_in_subslab,
    common_cluster,
    find_regeneration_points,
    is_f_connected,
    is_h_connected,
    skeleton_pieces_f_connected,
)
from .sampling import (
    ConditionedEnsemble,
    ConditionedSample,
    cluster_deviation,
    forced_bonds,
    max_regeneration_gap,
    regeneration_increments,
    sample_conditioned_cluster,
    sample_conditioned_clusters,
    skeleton_gamma,
    w_sensitivity,
)
from .slab import BondConfiguration, SlabGraph, SlabSpec, sample_configuration
from .xi import XiEstimate, connection_count, estimate_xi

__all__ = [
    "Batch",
    "BondConfiguration",
    "ClusterView",
    "ConditionedEnsemble",
    "ConditionedSample",
    "ConnectivityTable",
    "FactorizationRow",
    "RegenerationSkeleton",
    "RenewalReport",
    "SlabGraph",
    "SlabSpec",
    "XiEstimate",
    "all_patterns",
    "cluster_deviation",
    "cluster_in_subslab",
    "common_cluster",
    "connection_count",
    "enumerate_connectivity",
    "estimate_xi",
    "factorization_rhs",
    "find_regeneration_points",
    "forced_bonds",
    "is_f_connected",
    "is_h_connected",
    "max_regeneration_gap",
    "regeneration_increments",
    "sample_conditioned_cluster",
    "sample_conditioned_clusters",
    "sample_configuration",
    "sample_connectivity",
    "skeleton_gamma",
    "skeleton_pieces_f_connected",
    "verify_all_factorizations",
    "verify_renewal_factorization",
    "verify_renewal_relation",
    "w_sensitivity",
]
