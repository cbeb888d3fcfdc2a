"""Conditionally Poissonian power-law random graphs with tau in (2, 3).

Generation, core/tier structure, branching-process coupling, limit-formula
oracles and the experiment harness used to check robustness of the
ultra-small giant component against deletion of high-capacity vertices.
"""

from nrgraph.capacity import (
    CapacitySequence,
    SelectionDistribution,
    mean_capacity,
    pareto_quantile,
    sample_capacities,
    selection_distribution,
    size_biased_quantile,
    size_biased_tail,
)
from nrgraph.core import (
    CoreParameters,
    TierPartition,
    backup_depth,
    core_parameters,
    delete_above,
    ell,
    epsilon,
    horizontal_heuristic_check,
    robust_distance_bound,
    tier,
    tier_partition,
    w,
)
from nrgraph.engine import (
    UNREACHABLE,
    ComponentLabeling,
    InducedSubgraph,
    ShellSequence,
    bfs_distances,
    connected_components,
    exact_component_diameter,
    induced_subgraph,
    neighborhood_shells,
    sample_giant_distances,
)
from nrgraph.generator import MultiGraph, degree, generate_exact, generate_fast
from nrgraph.theory import (
    GiantPrediction,
    core_removed_scale,
    extinction_probability,
    giant_fraction,
    pi_star_pgf,
)

__version__ = "0.1.0"

__all__ = [
    "UNREACHABLE",
    "CapacitySequence",
    "ComponentLabeling",
    "CoreParameters",
    "GiantPrediction",
    "InducedSubgraph",
    "MultiGraph",
    "SelectionDistribution",
    "ShellSequence",
    "TierPartition",
    "backup_depth",
    "bfs_distances",
    "connected_components",
    "core_parameters",
    "core_removed_scale",
    "degree",
    "delete_above",
    "ell",
    "epsilon",
    "exact_component_diameter",
    "extinction_probability",
    "generate_exact",
    "generate_fast",
    "giant_fraction",
    "horizontal_heuristic_check",
    "induced_subgraph",
    "mean_capacity",
    "neighborhood_shells",
    "pareto_quantile",
    "pi_star_pgf",
    "robust_distance_bound",
    "sample_capacities",
    "sample_giant_distances",
    "selection_distribution",
    "size_biased_quantile",
    "size_biased_tail",
    "tier",
    "tier_partition",
    "w",
]
