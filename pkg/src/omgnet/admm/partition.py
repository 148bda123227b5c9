"""Cluster partitions and task assignment."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import PartitionError

__all__ = ["ClusterPartition", "TaskSchedule", "assign_tasks"]


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint clusters ``(nodes, edges)`` covering every node and edge."""

    clusters: tuple

    def __post_init__(self):
        cl = tuple((tuple(sorted(int(i) for i in nodes)), tuple(sorted(int(e) for e in edges)))
                   for nodes, edges in self.clusters)
        object.__setattr__(self, "clusters", cl)

    def __len__(self):
        return len(self.clusters)

    @classmethod
    def single(cls, grid):
        return cls(((range(grid.n), range(grid.m)),))

    @classmethod
    def per_element(cls, grid):
        """One cluster per node followed by one cluster per edge."""
        return cls(tuple(((i,), ()) for i in range(grid.n)) + tuple(((), (e,)) for e in range(grid.m)))

    @classmethod
    def from_labels(cls, node_labels, edge_labels):
        node_labels = np.asarray(node_labels, dtype=int)
        edge_labels = np.asarray(edge_labels, dtype=int)
        k = 1 + max(node_labels.max(initial=-1), edge_labels.max(initial=-1))
        return cls(tuple((np.flatnonzero(node_labels == c), np.flatnonzero(edge_labels == c))
                         for c in range(k)))

    @classmethod
    def edge_to_head(cls, grid, node_labels):
        """Clusters from node labels; each edge joins the cluster of its head."""
        node_labels = np.asarray(node_labels, dtype=int)
        return cls.from_labels(node_labels, node_labels[grid.heads] if grid.m else [])

    def owners(self, grid):
        """``(node_owner, edge_owner)`` arrays; raises on gaps or overlaps."""
        node_owner = np.full(grid.n, -1, dtype=np.int64)
        edge_owner = np.full(grid.m, -1, dtype=np.int64)
        for c, (nodes, edges) in enumerate(self.clusters):
            for i in nodes:
                if not 0 <= i < grid.n:
                    raise PartitionError(f"cluster {c} names unknown node {i}")
                if node_owner[i] >= 0:
                    raise PartitionError(f"node {i} owned by clusters {node_owner[i]} and {c}")
                node_owner[i] = c
            for e in edges:
                if not 0 <= e < grid.m:
                    raise PartitionError(f"cluster {c} names unknown edge {e}")
                if edge_owner[e] >= 0:
                    raise PartitionError(f"edge {e} owned by clusters {edge_owner[e]} and {c}")
                edge_owner[e] = c
        if np.any(node_owner < 0):
            raise PartitionError(f"unowned nodes {np.flatnonzero(node_owner < 0).tolist()}")
        if np.any(edge_owner < 0):
            raise PartitionError(f"unowned edges {np.flatnonzero(edge_owner < 0).tolist()}")
        return node_owner, edge_owner


class TaskSchedule(NamedTuple):
    """Who runs what, and which node-edge links cross cluster boundaries.

    ``pair_crossing[2e + s]`` flags the link between edge ``e`` and its head
    (``s = 0``) or tail (``s = 1``). Each link carries four messages per
    iteration (one per task family).
    """

    node_owner: np.ndarray
    edge_owner: np.ndarray
    cluster_nodes: tuple
    cluster_edges: tuple
    pair_crossing: np.ndarray
    neighbors: tuple

    @property
    def inter_cluster_per_iteration(self):
        return 4 * int(self.pair_crossing.sum())

    @property
    def intra_cluster_per_iteration(self):
        return 4 * int((~self.pair_crossing).sum())


def assign_tasks(partition, grid):
    """Map node tasks to the owner of the node and edge tasks to the owner of the edge."""
    node_owner, edge_owner = partition.owners(grid)
    heads, tails = grid.heads, grid.tails
    crossing = np.zeros(2 * grid.m, dtype=bool)
    crossing[0::2] = edge_owner != node_owner[heads]
    crossing[1::2] = edge_owner != node_owner[tails]
    k = len(partition)
    nbrs = [set() for _ in range(k)]
    for e in range(grid.m):
        for i in (heads[e], tails[e]):
            a, b = edge_owner[e], node_owner[i]
            if a != b:
                nbrs[a].add(int(b))
                nbrs[b].add(int(a))
    return TaskSchedule(
        node_owner, edge_owner,
        tuple(np.array(nodes, dtype=np.int64) for nodes, _ in partition.clusters),
        tuple(np.array(edges, dtype=np.int64) for _, edges in partition.clusters),
        crossing,
        tuple(tuple(sorted(s)) for s in nbrs),
    )
