"""Nearest neighbour equilibrium clustering."""

__version__ = "0.1.0"

from .clustering import ClusteringSolution, cluster, fit, select_seed, strength_matrix
from .dataset import Dataset, load_delimited, pca_reduce, preprocess, standardize
from .equilibrium import EquilibriumParams, grow_cluster, is_equilibrium
from .metrics import accuracy, ami, ari, evaluate
from .neighbours import NeighbourGraph, build_graph, overlap_counts, reverse_count
from .tuning import criterion, grid_search, refined_search

__all__ = [
    "ClusteringSolution", "Dataset", "EquilibriumParams", "NeighbourGraph",
    "accuracy", "ami", "ari", "build_graph", "cluster", "criterion", "evaluate",
    "fit", "grid_search", "grow_cluster", "is_equilibrium", "load_delimited",
    "overlap_counts", "pca_reduce", "preprocess", "refined_search", "reverse_count",
    "select_seed", "standardize", "strength_matrix",
]
