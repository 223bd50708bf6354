"""Clusters from a selected edge set: connected components and cluster edges."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

__all__ = [
    "UnionFind",
    "ClusterAssignment",
    "ClusterGraph",
    "connected_components",
    "derive_cluster_edges",
]


class UnionFind:
    """Disjoint sets over 1..m with path compression and union by size."""

    def __init__(self, m: int):
        self.parent = list(range(m + 1))
        self.size = [1] * (m + 1)

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass(frozen=True)
class ClusterAssignment:
    """Partition of the vertices; clusters ordered by smallest member."""

    members: tuple[tuple[int, ...], ...]

    @property
    def m_hat(self) -> int:
        return len(self.members)

    @property
    def vertex_to_cluster(self) -> dict[int, int]:
        return {v: i for i, block in enumerate(self.members, start=1) for v in block}

    def to_dict(self) -> dict:
        return {"clusters": [list(block) for block in self.members]}

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class ClusterGraph:
    """Edges between cluster indices induced by the original graph."""

    f_edges: tuple[tuple[int, int], ...]

    def neighbors(self, i: int) -> tuple[int, ...]:
        out = [l for (k, l) in self.f_edges if k == i]
        out += [k for (k, l) in self.f_edges if l == i]
        return tuple(sorted(out))


def connected_components(
    m: int, selected_edges: Iterable[tuple[int, int]]
) -> ClusterAssignment:
    """Components of the graph on 1..m, labeled by ascending smallest member.

    The labeling is a function of the resulting partition, so the output does
    not depend on edge processing order.
    """
    uf = UnionFind(m)
    for k, l in selected_edges:
        uf.union(k, l)
    blocks: dict[int, list[int]] = {}
    for v in range(1, m + 1):
        blocks.setdefault(uf.find(v), []).append(v)
    members = sorted((tuple(sorted(b)) for b in blocks.values()), key=lambda b: b[0])
    return ClusterAssignment(members=tuple(members))


def derive_cluster_edges(edges, a: ClusterAssignment) -> ClusterGraph:
    """Cluster-level edges: (i, j) present iff some original edge crosses
    clusters i and j. Intra-cluster edges are dropped."""
    v2c = a.vertex_to_cluster
    edge_iter = edges.edges if hasattr(edges, "edges") else edges
    out: set[tuple[int, int]] = set()
    for k, l in edge_iter:
        ci, cj = v2c[k], v2c[l]
        if ci != cj:
            out.add((min(ci, cj), max(ci, cj)))
    return ClusterGraph(f_edges=tuple(sorted(out)))
