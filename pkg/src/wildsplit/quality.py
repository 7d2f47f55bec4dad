"""Cluster-quality diagnostics and dataset statistics.

TP counts images clustered beyond singletons; FP counts images in a cluster
that do not share its modal date. The sweep merges edges incrementally while
theta decreases instead of re-clustering per grid point.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import NotTimestamped, WildsplitError
from .ingest import EmbeddingMatrix, MetadataTable
from .split import TEST_KNOWN, TEST_NEW, TRAIN, SplitAssignment


@dataclass(frozen=True)
class QualityPoint:
    theta: float
    tp: int
    fp: int


SIZE_BUCKETS = ["2", "3", "4", "5", "6+"]
TIME_BUCKETS = ["1", "2", "3", "4", "5", "6+"]


def _bucket(value: int, top: int = 6) -> str:
    return f"{top}+" if value >= top else str(value)


def tp_fp(clusters, dates) -> tuple[int, int]:
    """Eq.-style counts: tp = sum(|c|-1); fp = sum(|c| - modal-date count)."""
    tp = 0
    fp = 0
    for c in clusters:
        members = list(c)
        tp += len(members) - 1
        if len(members) == 1:
            continue
        day_counts = Counter()
        for i in members:
            d = dates[i]
            if d is None:
                raise NotTimestamped(f"image row {i} has no date")
            day_counts[d] += 1
        fp += len(members) - max(day_counts.values())
    return tp, fp


def default_theta_grid(lo: float = 0.90, hi: float = 1.00, step: float = 0.001):
    n = round((hi - lo) / step)
    return [lo + k * step for k in range(n + 1)]


def threshold_sweep(
    identity_indices: dict, embeddings: EmbeddingMatrix, dates, theta_grid
) -> list[QualityPoint]:
    """(tp, fp) at every grid theta over per-identity clusterings.

    Single edge sort; a union-find advances as theta decreases, carrying
    per-component date counters (merged small-to-large).
    """
    grid = list(theta_grid)
    if not grid:
        return []
    for a, b in zip(grid, grid[1:]):
        if b <= a:
            raise WildsplitError("theta grid must be strictly increasing")
    if grid[0] < -1.0 or grid[-1] > 1.0:
        raise WildsplitError("theta grid must lie within [-1, 1]")

    from .cluster import build_edges

    all_edges = []
    all_rows: list[int] = []
    for key in sorted(identity_indices):
        rows = list(identity_indices[key])
        base = len(all_rows)
        for e in build_edges(rows, embeddings):
            all_edges.append((e.sim, base + e.i, base + e.j))
        all_rows.extend(rows)
    for row in all_rows:
        if dates[row] is None:
            raise NotTimestamped(f"image row {row} has no date")
    all_edges.sort(key=lambda t: -t[0])

    n = len(all_rows)
    parent = list(range(n))
    size = [1] * n
    day_counts = [Counter({dates[r]: 1}) for r in all_rows]
    tp = 0  # n - number of components, maintained incrementally
    fp = 0

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def impurity(root):
        return size[root] - max(day_counts[root].values())

    def merge(i, j):
        nonlocal tp, fp
        ri, rj = find(i), find(j)
        if ri == rj:
            return
        if size[ri] > size[rj]:
            ri, rj = rj, ri
        fp -= impurity(ri) + impurity(rj)
        parent[ri] = rj
        size[rj] += size[ri]
        day_counts[rj].update(day_counts[ri])
        day_counts[ri] = Counter()
        fp += impurity(rj)
        tp += 1

    points: list[QualityPoint] = []
    pos = 0
    for theta in reversed(grid):
        while pos < len(all_edges) and all_edges[pos][0] >= theta:
            merge(all_edges[pos][1], all_edges[pos][2])
            pos += 1
        points.append(QualityPoint(theta, tp, fp))
    points.reverse()
    return points


def purity_table(clusters, dates) -> dict:
    """Cluster counts bucketed by size and unique-timestamp count.

    Singleton clusters are excluded. Per-row single-time share is reported as
    an exact fraction (absent for empty rows).
    """
    cells: dict[str, Counter] = {b: Counter() for b in SIZE_BUCKETS}
    for c in clusters:
        members = list(c)
        if len(members) < 2:
            continue
        dset = set()
        for i in members:
            if dates[i] is None:
                raise NotTimestamped(f"image row {i} has no date")
            dset.add(dates[i])
        cells[_bucket(len(members))][_bucket(len(dset))] += 1
    table: dict = {"rows": {}, "total_clusters": 0}
    for sb in SIZE_BUCKETS:
        row_total = sum(cells[sb].values())
        if row_total == 0:
            continue
        row = {tb: cells[sb].get(tb, 0) for tb in TIME_BUCKETS}
        table["rows"][sb] = {
            "counts": row,
            "total": row_total,
            "single_time_share": cells[sb].get("1", 0) / row_total,
        }
        table["total_clusters"] += row_total
    return table


def _side_stats(counts: list[int], is_test_side: bool) -> dict:
    counts = sorted(counts, reverse=True)
    n_ids = len(counts)
    total = sum(counts)
    histogram = Counter(counts)
    top = lambda p: sum(counts[: math.ceil(p * n_ids)]) / total
    out = {
        "identities": n_ids,
        "images": total,
        "images_per_identity_histogram": {str(k): v for k, v in sorted(histogram.items())},
        "top_1pct_image_share": top(0.01),
        "top_10pct_image_share": top(0.10),
    }
    if is_test_side:
        out["single_image_identity_fraction"] = (
            sum(1 for c in counts if c == 1) / n_ids
        )
    return out


def dataset_stats(table: MetadataTable, split: SplitAssignment) -> dict:
    """Per split-side imbalance statistics (histogram, top-k shares)."""
    sides = {TRAIN: Counter(), TEST_KNOWN: Counter(), TEST_NEW: Counter()}
    test_combined = Counter()
    for i, rec in enumerate(table.records):
        label = split.labels[i]
        sides[label][rec.identity_key] += 1
        if label != TRAIN:
            test_combined[rec.identity_key] += 1
    out = {}
    for name, counter in [
        (TRAIN, sides[TRAIN]),
        (TEST_KNOWN, sides[TEST_KNOWN]),
        (TEST_NEW, sides[TEST_NEW]),
        ("test", test_combined),
    ]:
        if not counter:
            out[name] = None
            continue
        out[name] = _side_stats(list(counter.values()), is_test_side=name != TRAIN)
    return out
