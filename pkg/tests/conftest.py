"""Shared fixtures: small cached graphs so individual tests stay fast."""

import numpy as np
import pytest

from delegate_bfs import rmat
from delegate_bfs.partition import ClusterShape, partition_graph


@pytest.fixture(scope="session")
def graph_s10():
    return rmat.build_rmat_graph(rmat.RmatParams(scale=10, seed=7))


@pytest.fixture(scope="session")
def graph_s12():
    return rmat.build_rmat_graph(rmat.RmatParams(scale=12, seed=3))


@pytest.fixture(scope="session")
def pg_s10(graph_s10):
    return partition_graph(graph_s10, 16, ClusterShape(2, 2))


@pytest.fixture(scope="session")
def pg_s12(graph_s12):
    return partition_graph(graph_s12, 16, ClusterShape(2, 2))


def make_edge_list(pairs, n):
    src = np.array([u for u, _ in pairs], dtype=np.int64)
    dst = np.array([v for _, v in pairs], dtype=np.int64)
    return rmat.EdgeList(src, dst, n=n)
