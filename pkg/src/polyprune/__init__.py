"""Parsimonious pruning of convex piecewise-linear (max-affine) functions.

Terms are clustered as points of the lifted Newton polytope with greedy
k-center, optionally after an LP or spectral-ball redundancy filter.
"""
from .baselines import cloud_error, pga_prune, pgd_prune
from .kcenter import PruneResult, brute_force_kcenter, greedy_kcenter, kcenter_cost, kcenter_error_bound
from .polyfunc import Box, MaxAffine, SampleCloud, SpectralBall
from .redundancy import contribution_value, prune_redundant

__version__ = "0.1.0"

__all__ = [
    "Box",
    "MaxAffine",
    "PruneResult",
    "SampleCloud",
    "SpectralBall",
    "brute_force_kcenter",
    "cloud_error",
    "contribution_value",
    "greedy_kcenter",
    "kcenter_cost",
    "kcenter_error_bound",
    "pga_prune",
    "pgd_prune",
    "prune_redundant",
]
