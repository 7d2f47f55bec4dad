"""Train/test split construction and leakage verification.

Three-step construction per dataset: a seeded open-set identity selection,
then a per-identity date cutoff where timestamps exist, otherwise whole
similarity clusters into train with singletons divided randomly. verify_split
re-checks the leakage invariants from the data alone.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import ClusterAssignment, cluster_dataset
from .errors import ClusterMismatch, NotTimestamped, UnknownDataset
from .ingest import EmbeddingMatrix, MetadataTable, SplitConfig

TRAIN = "train"
TEST_KNOWN = "test_known"
TEST_NEW = "test_new"
LABELS = (TRAIN, TEST_KNOWN, TEST_NEW)


@dataclass
class SplitAssignment:
    labels: list[str]       # per image row, one of LABELS
    provenance: list[str]   # openset | time_aware | similarity_cluster |
                            # similarity_singleton | forced_train | random

    def rows_with(self, label: str) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == label]


def _stream_rng(seed: int, *parts: str) -> np.random.Generator:
    """Deterministic per-(dataset, identity) RNG stream, order-independent."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(p.encode())
    return np.random.default_rng(int.from_bytes(h.digest(), "little"))


def select_openset_identities(
    table: MetadataTable, dataset: str, config: SplitConfig
) -> set[tuple[str, str]]:
    """ceil(openset_fraction * n) identities via a seeded shuffle of sorted keys."""
    if dataset not in table.by_dataset:
        raise UnknownDataset(dataset)
    keys = table.identities_of(dataset)
    k = math.ceil(config.openset_fraction * len(keys))
    if k == 0:
        return set()
    rng = _stream_rng(config.seed, dataset, "@openset")
    order = rng.permutation(len(keys))
    return {keys[i] for i in order[:k]}


def _target(train_ratio: float, n_images: int) -> int:
    return max(1, math.floor(train_ratio * n_images))


def time_aware_split(
    table: MetadataTable, identity_key: tuple[str, str], config: SplitConfig
) -> dict[int, tuple[str, str]]:
    """Date cutoff: smallest date-prefix covering the train target goes to train."""
    indices = table.by_identity[identity_key]
    by_date: dict = {}
    for i in indices:
        date = table.records[i].date
        if date is None:
            raise NotTimestamped(f"{identity_key} row {i} has no date")
        by_date.setdefault(date, []).append(i)
    dates = sorted(by_date)
    target = _target(config.train_ratio, len(indices))
    taken = 0
    cut = 0
    while cut < len(dates) and taken < target:
        taken += len(by_date[dates[cut]])
        cut += 1
    if cut == len(dates):
        # the prefix consumed every date (includes the single-date case)
        return {i: (TRAIN, "forced_train") for i in indices}
    out: dict[int, tuple[str, str]] = {}
    for d in dates[:cut]:
        for i in by_date[d]:
            out[i] = (TRAIN, "time_aware")
    for d in dates[cut:]:
        for i in by_date[d]:
            out[i] = (TEST_KNOWN, "time_aware")
    return out


def similarity_aware_split(
    table: MetadataTable,
    identity_key: tuple[str, str],
    clusters: ClusterAssignment,
    config: SplitConfig,
) -> dict[int, tuple[str, str]]:
    """Whole clusters to train; singletons split randomly up to the train target."""
    indices = table.by_identity[identity_key]
    if clusters.identity_key != identity_key or clusters.image_indices != sorted(indices):
        raise ClusterMismatch(f"clusters do not cover identity {identity_key}")
    if len(clusters.clusters) == 1:
        # single image, or all images in one cluster: nothing left to test on
        return {i: (TRAIN, "forced_train") for i in indices}
    out: dict[int, tuple[str, str]] = {}
    singletons: list[int] = []
    clustered = 0
    for c in clusters.clusters:
        if len(c) >= 2:
            clustered += len(c)
            for i in c:
                out[i] = (TRAIN, "similarity_cluster")
        else:
            singletons.append(c[0])
    singletons.sort()
    target = _target(config.train_ratio, len(indices))
    need = max(0, target - clustered)
    if need == 0:
        to_train: set[int] = set()
    else:
        rng = _stream_rng(config.seed, identity_key[0], identity_key[1])
        order = rng.permutation(len(singletons))
        to_train = {singletons[i] for i in order[:need]}
    for i in singletons:
        if i in to_train:
            out[i] = (TRAIN, "similarity_singleton")
        else:
            out[i] = (TEST_KNOWN, "similarity_singleton")
    return out


def build_split(
    table: MetadataTable,
    embeddings: EmbeddingMatrix,
    config: SplitConfig,
    threads: int = 1,
    clusters_by_dataset: dict[str, list[ClusterAssignment]] | None = None,
):
    """Full split over all datasets. Returns (SplitAssignment, summary dict).

    Precomputed clusters may be passed to avoid re-clustering; missing datasets
    are clustered on the fly.
    """
    labels = [""] * len(table)
    provenance = [""] * len(table)

    def place(rows: dict[int, tuple[str, str]]):
        for i, (lab, prov) in rows.items():
            labels[i] = lab
            provenance[i] = prov

    summary: dict[str, dict[str, int]] = {}
    for dataset in table.datasets:
        openset = select_openset_identities(table, dataset, config)
        for key in openset:
            place({i: (TEST_NEW, "openset") for i in table.by_identity[key]})
        closed_keys = [k for k in table.identities_of(dataset) if k not in openset]
        if config.timestamped(dataset, table):
            def run(key):
                return time_aware_split(table, key, config)
        else:
            if clusters_by_dataset is not None and dataset in clusters_by_dataset:
                by_key = {a.identity_key: a for a in clusters_by_dataset[dataset]}
            else:
                by_key = {
                    a.identity_key: a
                    for a in cluster_dataset(table, dataset, embeddings, config, threads)
                }
            def run(key):
                return similarity_aware_split(table, key, by_key[key], config)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run, closed_keys))
        else:
            results = [run(k) for k in closed_keys]
        for rows in results:
            place(rows)
        summary[dataset] = _summarize(table, dataset, labels)
    return SplitAssignment(labels, provenance), summary


def _summarize(table: MetadataTable, dataset: str, labels) -> dict[str, int]:
    rows = table.by_dataset[dataset]
    counts = {lab: 0 for lab in LABELS}
    idents: dict[str, set] = {lab: set() for lab in LABELS}
    for i in rows:
        counts[labels[i]] += 1
        idents[labels[i]].add(table.records[i].identity_key)
    return {
        "train_images": counts[TRAIN],
        "test_known_images": counts[TEST_KNOWN],
        "test_new_images": counts[TEST_NEW],
        "train_identities": len(idents[TRAIN]),
        "test_known_identities": len(idents[TEST_KNOWN]),
        "test_new_identities": len(idents[TEST_NEW]),
    }


def random_split(
    table: MetadataTable, reference: SplitAssignment, seed: int
) -> SplitAssignment:
    """Leakage-agnostic baseline: same per-identity label counts, random images.

    test_new identities are left untouched (openness is identity-level).
    """
    labels = [""] * len(table)
    provenance = ["random"] * len(table)
    for key, indices in table.by_identity.items():
        ref = [reference.labels[i] for i in indices]
        if TEST_NEW in ref:
            for i in indices:
                labels[i] = TEST_NEW
            continue
        n_train = sum(1 for l in ref if l == TRAIN)
        rng = _stream_rng(seed, key[0], key[1], "@random")
        ordered = sorted(indices)
        order = rng.permutation(len(ordered))
        chosen = {ordered[i] for i in order[:n_train]}
        for i in ordered:
            labels[i] = TRAIN if i in chosen else TEST_KNOWN
    return SplitAssignment(labels, provenance)


@dataclass
class ViolationReport:
    date_straddle_identities: int = 0
    similarity_leaks: int = 0
    openset_contaminated_identities: int = 0
    orphan_test_identities: int = 0
    details: list[str] = field(default_factory=list)

    def total(self) -> int:
        return (
            self.date_straddle_identities
            + self.similarity_leaks
            + self.openset_contaminated_identities
            + self.orphan_test_identities
        )

    def to_dict(self) -> dict:
        return {
            "date_straddle_identities": self.date_straddle_identities,
            "similarity_leaks": self.similarity_leaks,
            "openset_contaminated_identities": self.openset_contaminated_identities,
            "orphan_test_identities": self.orphan_test_identities,
            "total": self.total(),
            "details": self.details,
        }


def verify_split(
    table: MetadataTable,
    embeddings: EmbeddingMatrix,
    split: SplitAssignment,
    config: SplitConfig,
    clusters_by_dataset: dict[str, list[ClusterAssignment]] | None = None,
) -> ViolationReport:
    """Re-check the four leakage invariants; violations are data, not errors.

    (a) shared date across train/test_known within an identity (time-aware
    datasets); (b) test_known image with similarity >= theta to a same-identity
    train image (similarity-aware datasets); (c) test_new identity with any
    other label; (d) test_known identity with no train image.
    """
    del clusters_by_dataset  # checks are made from similarities, not cluster files
    report = ViolationReport()
    for key, indices in table.by_identity.items():
        dataset = key[0]
        train = [i for i in indices if split.labels[i] == TRAIN]
        test = [i for i in indices if split.labels[i] == TEST_KNOWN]
        new = [i for i in indices if split.labels[i] == TEST_NEW]
        if new and (train or test):
            report.openset_contaminated_identities += 1
            report.details.append(f"open-set identity {key} has non-test_new images")
            continue
        if test and not train:
            report.orphan_test_identities += 1
            report.details.append(f"identity {key} has test_known images but no train")
        if not (train and test):
            continue
        if config.timestamped(dataset, table):
            train_dates = {table.records[i].date for i in train}
            test_dates = {table.records[i].date for i in test}
            shared = train_dates & test_dates
            if shared:
                report.date_straddle_identities += 1
                report.details.append(
                    f"identity {key} shares dates {sorted(map(str, shared))}"
                )
        else:
            theta = config.theta_for(dataset)
            tr = embeddings.values[np.asarray(train, dtype=np.intp)].astype(np.float64)
            te = embeddings.values[np.asarray(test, dtype=np.intp)].astype(np.float64)
            max_sims = (te @ tr.T).max(axis=1)
            for pos in np.flatnonzero(max_sims >= theta):
                report.similarity_leaks += 1
                report.details.append(
                    f"test image row {test[int(pos)]} of {key}: "
                    f"max train similarity {max_sims[int(pos)]:.6f} >= theta {theta}"
                )
    return report


def write_split(path, table: MetadataTable, split: SplitAssignment) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("image_id,split\n")
        for rec, label in zip(table.records, split.labels):
            fh.write(f"{rec.image_id},{label}\n")


def load_split(path, table: MetadataTable) -> SplitAssignment:
    import csv as _csv

    labels = [""] * len(table)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header != ["image_id", "split"]:
            from .errors import BadHeader

            raise BadHeader(f"expected image_id,split header, got {header}")
        for image_id, label in reader:
            if label not in LABELS:
                from .errors import WildsplitError

                raise WildsplitError(f"unknown split label {label!r}")
            labels[table.row_of_image_id[image_id]] = label
    return SplitAssignment(labels, ["unknown"] * len(table))
