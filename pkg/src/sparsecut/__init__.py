"""Sparse cuts from multiscale ring processes and beta-entropy maximization."""
from .cluster import Clustering, MrpParams, cluster_mrp, evaluate_clustering, merge_safe_sets
from .entropy import ball_cover, beta_entropy, cluster_entropy, snell_envelope, value_function
from .estimators import EntropyClustering, MRPClustering
from .graph import WeightedGraph, check_graph, conductance, load_graph, mutual_conductance
from .oracle import SbmSpec, adjusted_rand_index, generate_sbm

__all__ = [
    "Clustering",
    "EntropyClustering",
    "MRPClustering",
    "MrpParams",
    "SbmSpec",
    "WeightedGraph",
    "adjusted_rand_index",
    "ball_cover",
    "beta_entropy",
    "check_graph",
    "cluster_entropy",
    "cluster_mrp",
    "conductance",
    "evaluate_clustering",
    "generate_sbm",
    "load_graph",
    "merge_safe_sets",
    "mutual_conductance",
    "snell_envelope",
    "value_function",
]

__version__ = "0.1.0"
