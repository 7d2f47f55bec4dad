"""Threshold-stopped single-linkage clustering over per-identity similarity graphs.

Per identity, every image pair gets a cosine-similarity edge; edges are sorted
by descending similarity and merged by union-find until the similarity drops
below theta. The connected components are the (proxy-encounter) clusters the
split module consumes.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimMismatch, UnknownDataset, UnknownIdentity, UnsortedEdges
from .ingest import EmbeddingMatrix, MetadataTable, SplitConfig


class SimilarityEdge(NamedTuple):
    i: int
    j: int
    sim: float


@dataclass
class ClusterAssignment:
    identity_key: tuple[str, str]
    clusters: list[list[int]]  # disjoint global row indices, each sorted
    theta: float

    @property
    def image_indices(self) -> list[int]:
        return sorted(i for c in self.clusters for i in c)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Dot product of two unit vectors, accumulated in float64, clamped to [-1, 1]."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise DimMismatch(f"shapes {u.shape} and {v.shape}")
    s = float(np.dot(u.astype(np.float64), v.astype(np.float64)))
    return min(1.0, max(-1.0, s))


def _similarity_matrix(indices, embeddings: EmbeddingMatrix) -> np.ndarray:
    sub = embeddings.values[np.asarray(indices, dtype=np.intp)].astype(np.float64)
    return np.clip(sub @ sub.T, -1.0, 1.0)


def build_edges(indices, embeddings: EmbeddingMatrix) -> list[SimilarityEdge]:
    """All pairwise edges over `indices`, sorted by descending similarity.

    Ties are broken by ascending (i, j); i/j are positions within `indices`,
    not global rows.
    """
    n = len(indices)
    if n < 2:
        return []
    sims = _similarity_matrix(indices, embeddings)
    iu, ju = np.triu_indices(n, k=1)
    edges = [SimilarityEdge(int(i), int(j), float(sims[i, j])) for i, j in zip(iu, ju)]
    edges.sort(key=lambda e: (-e.sim, e.i, e.j))
    return edges


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]  # path compression
            i = parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[ri] = rj
        return True


def find_clusters(edges, n: int, theta: float) -> list[set[int]]:
    """Connected components of the graph {(i, j) : sim >= theta}.

    Edges with sim exactly equal to theta are merged; the loop stops strictly
    below theta. Input must be sorted by descending similarity.
    """
    uf = _UnionFind(n)
    prev = float("inf")
    for e in edges:
        if e.sim > prev:
            raise UnsortedEdges(f"edge ({e.i},{e.j}) sim {e.sim} after {prev}")
        prev = e.sim
        if e.sim < theta:
            break
        uf.union(e.i, e.j)
    groups: dict[int, set[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), set()).add(i)
    return sorted(groups.values(), key=min)


def cluster_identity(
    table: MetadataTable,
    identity_key: tuple[str, str],
    embeddings: EmbeddingMatrix,
    theta: float,
) -> ClusterAssignment:
    """Cluster one identity's images; no cross-identity edges exist."""
    indices = table.by_identity.get(identity_key)
    if indices is None:
        raise UnknownIdentity(identity_key)
    edges = build_edges(indices, embeddings)
    components = find_clusters(edges, len(indices), theta)
    clusters = [sorted(indices[i] for i in comp) for comp in components]
    clusters.sort(key=lambda c: c[0])
    return ClusterAssignment(identity_key, clusters, theta)


def cluster_dataset(
    table: MetadataTable,
    dataset: str,
    embeddings: EmbeddingMatrix,
    config: SplitConfig,
    threads: int = 1,
) -> list[ClusterAssignment]:
    """Cluster every identity of a dataset at its configured theta.

    Results are returned in identity-key order regardless of thread count.
    """
    if dataset not in table.by_dataset:
        raise UnknownDataset(dataset)
    theta = config.theta_for(dataset)
    keys = table.identities_of(dataset)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(
                pool.map(lambda k: cluster_identity(table, k, embeddings, theta), keys)
            )
    return [cluster_identity(table, k, embeddings, theta) for k in keys]


def numbered_clusters(assignment: ClusterAssignment) -> list[tuple[int, list[int]]]:
    """Cluster ids within an identity: descending size, then smallest member index."""
    ordered = sorted(assignment.clusters, key=lambda c: (-len(c), c[0]))
    return list(enumerate(ordered))


def write_clusters(path, table: MetadataTable, assignments) -> None:
    """Cluster CSV: image_id,dataset,identity,cluster_id with rows in table order."""
    label: dict[int, str] = {}
    for a in assignments:
        for k, members in numbered_clusters(a):
            for row in members:
                label[row] = f"{a.identity_key[1]}#{k}"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "dataset", "identity", "cluster_id"])
        for row in sorted(label):
            rec = table.records[row]
            writer.writerow([rec.image_id, rec.dataset, rec.identity, label[row]])
