"""Loading and validation of metadata tables, embeddings, logits, and config.

Row order of the metadata file is the global image index: row i of every
aligned artifact (embeddings, logits, splits, clusters) refers to records[i].
"""
from __future__ import annotations

import csv
import datetime
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDate,
    BadField,
    BadHeader,
    BadMagic,
    ClassCountMismatch,
    DuplicateId,
    RowMismatch,
    Truncated,
    WildsplitError,
    ZeroVector,
)

METADATA_HEADER = ["image_id", "dataset", "identity", "date", "path"]

EMB1_MAGIC = b"EMB1"
_EMB1_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    dataset: str
    identity: str
    date: datetime.date | None = None
    path: str | None = None

    @property
    def identity_key(self) -> tuple[str, str]:
        # identities are scoped per dataset; names collide across datasets
        return (self.dataset, self.identity)


class MetadataTable:
    """Immutable, index-built view over an ordered list of ImageRecords."""

    def __init__(self, records: list[ImageRecord]):
        seen: set[str] = set()
        for rec in records:
            if rec.image_id in seen:
                raise DuplicateId(rec.image_id)
            seen.add(rec.image_id)
        self.records = list(records)
        self.by_dataset: dict[str, list[int]] = {}
        self.by_identity: dict[tuple[str, str], list[int]] = {}
        self.row_of_image_id: dict[str, int] = {}
        for i, rec in enumerate(self.records):
            self.by_dataset.setdefault(rec.dataset, []).append(i)
            self.by_identity.setdefault(rec.identity_key, []).append(i)
            self.row_of_image_id[rec.image_id] = i
        # a dataset is timestamped iff every one of its records has a date
        self.timestamped: dict[str, bool] = {
            ds: all(self.records[i].date is not None for i in rows)
            for ds, rows in self.by_dataset.items()
        }

    def __len__(self) -> int:
        return len(self.records)

    @property
    def datasets(self) -> list[str]:
        return sorted(self.by_dataset)

    def identities_of(self, dataset: str) -> list[tuple[str, str]]:
        return sorted(k for k in self.by_identity if k[0] == dataset)


def load_metadata(path) -> MetadataTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BadHeader("empty metadata file")
        if header != METADATA_HEADER:
            raise BadHeader(
                f"expected header {','.join(METADATA_HEADER)}, got {','.join(header)}"
            )
        records = []
        for row_no, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(METADATA_HEADER):
                raise BadHeader(f"row {row_no}: expected {len(METADATA_HEADER)} fields")
            image_id, dataset, identity, date_s, path_s = row
            if not image_id:
                raise BadField(row_no, "image_id")
            if not dataset:
                raise BadField(row_no, "dataset")
            if not identity:
                raise BadField(row_no, "identity")
            date = None
            if date_s:
                try:
                    date = datetime.date.fromisoformat(date_s)
                except ValueError:
                    raise BadDate(row_no, date_s)
            records.append(
                ImageRecord(image_id, dataset, identity, date, path_s or None)
            )
    return MetadataTable(records)


def write_metadata(path, table: MetadataTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METADATA_HEADER)
        for rec in table.records:
            writer.writerow(
                [
                    rec.image_id,
                    rec.dataset,
                    rec.identity,
                    rec.date.isoformat() if rec.date else "",
                    rec.path or "",
                ]
            )


@dataclass
class EmbeddingMatrix:
    values: np.ndarray  # float32, shape (rows, dims)
    normalized: bool = False

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def normalize(self) -> "EmbeddingMatrix":
        """L2-normalize every row in place; raises ZeroVector on degenerate rows."""
        norms = np.linalg.norm(self.values.astype(np.float64), axis=1)
        bad = np.flatnonzero(norms < 1e-12)
        if bad.size:
            raise ZeroVector(int(bad[0]))
        self.values = (self.values / norms[:, None]).astype(np.float32)
        self.normalized = True
        return self


def _read_emb1(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_EMB1_HEADER.size)
        if len(head) < _EMB1_HEADER.size:
            raise Truncated(f"{path}: header incomplete")
        magic, rows, dims = _EMB1_HEADER.unpack(head)
        if magic != EMB1_MAGIC:
            raise BadMagic(f"{path}: bad magic {magic!r}")
        body = fh.read()
    expected_bytes = rows * dims * 4
    if len(body) != expected_bytes:
        raise Truncated(
            f"{path}: body is {len(body)} bytes, header implies {expected_bytes}"
        )
    return np.frombuffer(body, dtype="<f4").reshape(rows, dims).copy()


def load_embeddings(path, expected_rows: int) -> EmbeddingMatrix:
    values = _read_emb1(path)
    if values.shape[0] != expected_rows:
        raise RowMismatch(values.shape[0], expected_rows)
    return EmbeddingMatrix(values).normalize()


def load_logits(path, classes_path, expected_rows: int):
    """Raw (unnormalized) logit matrix plus its column-order class list."""
    values = _read_emb1(path)
    if values.shape[0] != expected_rows:
        raise RowMismatch(values.shape[0], expected_rows)
    with open(classes_path, encoding="utf-8") as fh:
        classes = json.load(fh)
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise WildsplitError(f"{classes_path}: expected a JSON array of strings")
    if values.shape[1] != len(classes):
        raise ClassCountMismatch(values.shape[1], len(classes))
    return EmbeddingMatrix(values, normalized=False), classes


def write_embeddings(path, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise WildsplitError("embedding matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(_EMB1_HEADER.pack(EMB1_MAGIC, values.shape[0], values.shape[1]))
        fh.write(values.tobytes())


@dataclass
class SplitConfig:
    openset_fraction: float = 0.05
    train_ratio: float = 0.85
    seed: int = 0
    per_dataset_theta: dict[str, float] = field(default_factory=dict)
    default_theta: float = 0.97
    use_timestamps: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.openset_fraction <= 1.0):
            raise WildsplitError("openset_fraction must lie in [0, 1]")
        if not (0.0 < self.train_ratio <= 1.0):
            raise WildsplitError("train_ratio must lie in (0, 1]")
        for theta in [self.default_theta, *self.per_dataset_theta.values()]:
            if not (-1.0 <= theta <= 1.0) or math.isnan(theta):
                raise WildsplitError(f"theta {theta} outside [-1, 1]")

    def theta_for(self, dataset: str) -> float:
        return self.per_dataset_theta.get(dataset, self.default_theta)

    def timestamped(self, dataset: str, table: MetadataTable) -> bool:
        """Whether the split should treat this dataset as time-aware."""
        auto = table.timestamped.get(dataset, False)
        return self.use_timestamps.get(dataset, auto) and auto

    def to_dict(self) -> dict:
        return {
            "openset_fraction": self.openset_fraction,
            "train_ratio": self.train_ratio,
            "seed": self.seed,
            "per_dataset_theta": dict(sorted(self.per_dataset_theta.items())),
            "default_theta": self.default_theta,
            "use_timestamps": dict(sorted(self.use_timestamps.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise WildsplitError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SplitConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
