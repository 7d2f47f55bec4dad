"""Synthetic worlds with known identities, encounters, dates, and embeddings.

Identity centroids sit on a scaled unit sphere; encounter centers perturb the
centroid; images perturb the encounter center and are re-normalized. The
separability ordering (image noise < encounter spread < identity spread)
makes the true encounter partition recoverable by thresholded clustering.
"""
from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSpec, NotSeparable
from .ingest import EmbeddingMatrix, ImageRecord, MetadataTable

_BASE_DATE = datetime.date(2020, 1, 1)


@dataclass
class WorldSpec:
    seed: int = 0
    n_datasets: int = 2
    identities_per_dataset: int = 20
    images_per_identity_mean: float = 6.0
    images_per_identity_cap: int = 40
    encounters_per_identity_mean: float = 2.5
    embedding_dim: int = 64
    identity_spread: float = 1.0
    encounter_spread: float = 0.15
    image_noise: float = 0.01
    timestamped: tuple[bool, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.timestamped:
            # default: alternate timestamped / untimestamped datasets
            self.timestamped = tuple(i % 2 == 0 for i in range(self.n_datasets))
        if len(self.timestamped) != self.n_datasets:
            raise BadSpec("timestamped flags must match n_datasets")
        if self.n_datasets < 1 or self.identities_per_dataset < 1:
            raise BadSpec("need at least one dataset and one identity")
        if self.embedding_dim < 2:
            raise BadSpec("embedding_dim must be >= 2")
        if self.images_per_identity_mean < 1 or self.images_per_identity_cap < 1:
            raise BadSpec("images-per-identity distribution must allow >= 1 image")
        if self.encounters_per_identity_mean < 1:
            raise BadSpec("encounters_per_identity_mean must be >= 1")
        # non-strict between the noise scales so the degenerate (equal or zero
        # spread) cases stay constructible for negative tests
        if not (0.0 <= self.image_noise <= self.encounter_spread < self.identity_spread):
            raise BadSpec(
                "separability requires image_noise <= encounter_spread < identity_spread"
            )


@dataclass
class WorldTruth:
    spec: WorldSpec
    table: MetadataTable
    embeddings: EmbeddingMatrix
    encounter_ids: list[str]        # identity-scoped, aligned with table rows
    dates: list[datetime.date]      # true date per row, even when not exported


def _truncated_geometric(rng: np.random.Generator, mean: float, cap: int) -> int:
    p = min(1.0, 1.0 / mean)
    return int(min(cap, rng.geometric(p)))


def generate_world(spec: WorldSpec) -> WorldTruth:
    rng = np.random.default_rng(spec.seed)
    records: list[ImageRecord] = []
    vectors: list[np.ndarray] = []
    encounter_ids: list[str] = []
    dates: list[datetime.date] = []
    day = 0
    for d in range(spec.n_datasets):
        dataset = f"synth{d:02d}"
        stamped = spec.timestamped[d]
        for j in range(spec.identities_per_dataset):
            identity = f"id{j:04d}"
            n_img = _truncated_geometric(
                rng, spec.images_per_identity_mean, spec.images_per_identity_cap
            )
            n_enc = min(
                n_img, _truncated_geometric(rng, spec.encounters_per_identity_mean, n_img)
            )
            # each encounter gets one image, the rest are assigned uniformly
            assignment = list(range(n_enc)) + [
                int(rng.integers(n_enc)) for _ in range(n_img - n_enc)
            ]
            centroid = rng.normal(size=spec.embedding_dim)
            centroid *= spec.identity_spread / np.linalg.norm(centroid)
            enc_centers = centroid + rng.normal(
                scale=spec.encounter_spread, size=(n_enc, spec.embedding_dim)
            )
            enc_dates = []
            for _ in range(n_enc):
                enc_dates.append(_BASE_DATE + datetime.timedelta(days=day))
                day += 1
            for img_no, enc in enumerate(assignment):
                vec = enc_centers[enc] + rng.normal(
                    scale=spec.image_noise, size=spec.embedding_dim
                )
                vectors.append(vec)
                records.append(
                    ImageRecord(
                        image_id=f"{dataset}_{identity}_{img_no:03d}",
                        dataset=dataset,
                        identity=identity,
                        date=enc_dates[enc] if stamped else None,
                        path=None,
                    )
                )
                encounter_ids.append(f"{identity}/enc{enc}")
                dates.append(enc_dates[enc])
    matrix = EmbeddingMatrix(np.asarray(vectors, dtype=np.float32)).normalize()
    return WorldTruth(spec, MetadataTable(records), matrix, encounter_ids, dates)


def oracle_theta(world: WorldTruth) -> float:
    """Midpoint of the within-encounter / cross-encounter similarity gap.

    Only same-identity pairs matter: the clustering never links across
    identities. Raises NotSeparable when the two ranges overlap.
    """
    values = world.embeddings.values.astype(np.float64)
    min_within = 1.0
    max_cross = -1.0
    for key, rows in world.table.by_identity.items():
        if len(rows) < 2:
            continue
        sub = values[np.asarray(rows, dtype=np.intp)]
        sims = np.clip(sub @ sub.T, -1.0, 1.0)
        encs = [world.encounter_ids[i] for i in rows]
        for a in range(len(rows)):
            for b in range(a + 1, len(rows)):
                if encs[a] == encs[b]:
                    min_within = min(min_within, sims[a, b])
                else:
                    max_cross = max(max_cross, sims[a, b])
    if min_within <= max_cross:
        raise NotSeparable(
            f"min within-encounter sim {min_within:.6f} <= "
            f"max cross-encounter sim {max_cross:.6f}"
        )
    return (min_within + max_cross) / 2.0


def true_partition(world: WorldTruth, identity_key) -> list[list[int]]:
    """Ground-truth encounter partition of one identity, as sorted row lists."""
    groups: dict[str, list[int]] = {}
    for i in world.table.by_identity[identity_key]:
        groups.setdefault(world.encounter_ids[i], []).append(i)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def write_world(world: WorldTruth, outdir) -> dict:
    """Emit metadata CSV + EMB1 embeddings + truth sidecar; returns the paths."""
    from pathlib import Path

    from .ingest import write_embeddings, write_metadata

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "metadata": outdir / "metadata.csv",
        "embeddings": outdir / "embeddings.emb1",
        "truth": outdir / "truth.json",
    }
    write_metadata(paths["metadata"], world.table)
    write_embeddings(paths["embeddings"], world.embeddings.values)
    truth = {
        rec.image_id: world.encounter_ids[i]
        for i, rec in enumerate(world.table.records)
    }
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return {k: str(v) for k, v in paths.items()}
