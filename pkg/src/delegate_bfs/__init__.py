"""Desk-scale simulator for delegate-partitioned distributed BFS/DOBFS."""

from .engine import BfsOptions, BfsRun, benchmark, compute_teps, run_bfs
from .partition import ClusterShape, PartitionedGraph, partition_graph
from .rmat import EdgeList, RmatParams, build_rmat_graph, generate_rmat
from .storage import memory_footprint

__all__ = [
    "BfsOptions",
    "BfsRun",
    "ClusterShape",
    "EdgeList",
    "PartitionedGraph",
    "RmatParams",
    "benchmark",
    "build_rmat_graph",
    "compute_teps",
    "generate_rmat",
    "memory_footprint",
    "partition_graph",
    "run_bfs",
]

__version__ = "0.1.0"
