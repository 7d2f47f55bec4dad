import datetime

import numpy as np
import pytest

from wildsplit.ingest import EmbeddingMatrix, ImageRecord, MetadataTable


def make_table(rows):
    """rows: list of (image_id, dataset, identity, date_str_or_None)."""
    records = []
    for r in rows:
        image_id, dataset, identity, date = r[:4]
        path = r[4] if len(r) > 4 else None
        d = datetime.date.fromisoformat(date) if date else None
        records.append(ImageRecord(image_id, dataset, identity, d, path))
    return MetadataTable(records)


def make_embeddings(vectors):
    return EmbeddingMatrix(np.asarray(vectors, dtype=np.float32)).normalize()


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def brute_force_components(n, sim, theta):
    """Connected components of {(i,j): sim[i,j] >= theta} by BFS."""
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        comp = set()
        stack = [start]
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.add(i)
            for j in range(n):
                if not seen[j] and sim[i][j] >= theta:
                    seen[j] = True
                    stack.append(j)
        comps.append(frozenset(comp))
    return set(comps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
