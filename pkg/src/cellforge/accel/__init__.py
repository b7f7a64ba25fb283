"""Clustering, identical-transistor ordering, routing lower bounds, gap policy."""
from .cluster import (ClusterSet, build_circuit_graph, cluster_netlist, dump_clusters, embed_and_cluster,
                      parse_clusters, spring_embedding)
from .constraints import cluster_constraints, itp_constraints
from .gap import GapPolicy, gap_termination, relative_gap
from .rlbt import RlbtBound, box_hpwl, hpwl

__all__ = [
    "ClusterSet", "GapPolicy", "RlbtBound", "box_hpwl", "build_circuit_graph", "cluster_constraints",
    "cluster_netlist", "dump_clusters", "embed_and_cluster", "gap_termination", "hpwl", "itp_constraints",
    "parse_clusters", "relative_gap", "spring_embedding",
]
