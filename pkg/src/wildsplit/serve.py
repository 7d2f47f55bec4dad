"""Local HTTP JSON API for the threshold-tuning workbench.

Single-session desk tool: one metadata table and embedding matrix loaded at
startup, per-identity edges precomputed, and a mutable per-dataset theta map
persisted back to the config file. All GETs are pure reads.
"""
from __future__ import annotations

import json
import mimetypes
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .cluster import build_edges, find_clusters, numbered_clusters
from .ingest import (
    EmbeddingMatrix,
    MetadataTable,
    SplitConfig,
    load_embeddings,
    load_metadata,
)
from .quality import default_theta_grid, purity_table, threshold_sweep, tp_fp


@dataclass
class SessionState:
    table: MetadataTable
    embeddings: EmbeddingMatrix
    config_path: str
    config: SplitConfig
    edges: dict = field(default_factory=dict)   # identity key -> sorted edges
    _write_lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def load(cls, metadata_path, embeddings_path, config_path) -> "SessionState":
        table = load_metadata(metadata_path)
        embeddings = load_embeddings(embeddings_path, len(table))
        config = SplitConfig.from_json(config_path)
        edges = {
            key: build_edges(rows, embeddings)
            for key, rows in table.by_identity.items()
        }
        return cls(table, embeddings, str(config_path), config, edges)

    def clusters_at(self, dataset: str, theta: float):
        """Recompute clusters for every identity of a dataset at theta."""
        out = []
        for key in self.table.identities_of(dataset):
            rows = self.table.by_identity[key]
            comps = find_clusters(self.edges[key], len(rows), theta)
            out.append((key, [sorted(rows[i] for i in c) for c in comps]))
        return out

    def save_threshold(self, dataset: str, theta: float) -> None:
        with self._write_lock:
            self.config.per_dataset_theta[dataset] = theta
            path = Path(self.config_path)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.config.to_dict(), fh, indent=1, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, path)


class ThresholdBody(BaseModel):
    dataset: str
    theta: float


def create_app(session: SessionState, static_dir=None) -> FastAPI:
    app = FastAPI(title="wildsplit workbench API")

    def check_dataset(dataset: str) -> None:
        if dataset not in session.table.by_dataset:
            raise HTTPException(404, f"unknown dataset {dataset!r}")

    def check_theta(theta: float) -> None:
        if not (-1.0 <= theta <= 1.0):
            raise HTTPException(400, f"theta {theta} outside [-1, 1]")

    @app.get("/api/datasets")
    def get_datasets():
        return {
            "datasets": [
                {
                    "name": ds,
                    "timestamped": session.table.timestamped[ds],
                    "images": len(session.table.by_dataset[ds]),
                    "identities": len(session.table.identities_of(ds)),
                    "saved_theta": session.config.per_dataset_theta.get(ds),
                    "default_theta": session.config.default_theta,
                }
                for ds in session.table.datasets
            ]
        }

    @app.get("/api/sweep")
    def get_sweep(dataset: str):
        check_dataset(dataset)
        if not session.table.timestamped[dataset]:
            return {"dataset": dataset, "timestamped": False, "points": []}
        identity_indices = {
            key: rows
            for key, rows in session.table.by_identity.items()
            if key[0] == dataset
        }
        dates = [rec.date for rec in session.table.records]
        points = threshold_sweep(
            identity_indices, session.embeddings, dates, default_theta_grid()
        )
        return {
            "dataset": dataset,
            "timestamped": True,
            "points": [{"theta": p.theta, "tp": p.tp, "fp": p.fp} for p in points],
        }

    @app.get("/api/clusters")
    def get_clusters(dataset: str, theta: float):
        check_dataset(dataset)
        check_theta(theta)
        listing = []
        for key, comps in session.clusters_at(dataset, theta):
            assignment_clusters = sorted(comps, key=lambda c: (-len(c), c[0]))
            for k, members in enumerate(assignment_clusters):
                recs = [session.table.records[i] for i in members]
                listing.append(
                    {
                        "identity": key[1],
                        "cluster_id": f"{key[1]}#{k}",
                        "size": len(members),
                        "image_ids": [r.image_id for r in recs],
                        "paths": [r.path for r in recs],
                        "dates": sorted(
                            {r.date.isoformat() for r in recs if r.date}
                        ),
                    }
                )
        listing.sort(key=lambda c: (-c["size"], c["identity"], c["cluster_id"]))
        return {"dataset": dataset, "theta": theta, "clusters": listing}

    @app.get("/api/quality")
    def get_quality(dataset: str, theta: float):
        check_dataset(dataset)
        check_theta(theta)
        clusters = [
            c for _, comps in session.clusters_at(dataset, theta) for c in comps
        ]
        body: dict = {"dataset": dataset, "theta": theta}
        if session.table.timestamped[dataset]:
            dates = [rec.date for rec in session.table.records]
            tp, fp = tp_fp(clusters, dates)
            body.update(tp=tp, fp=fp, purity=purity_table(clusters, dates))
        else:
            # impurity needs dates; the workbench falls back to sizes only
            body.update(tp=None, fp=None, purity=None)
        body["cluster_sizes"] = sorted((len(c) for c in clusters), reverse=True)
        return body

    @app.post("/api/threshold")
    def put_threshold(body: ThresholdBody):
        check_dataset(body.dataset)
        check_theta(body.theta)
        session.save_threshold(body.dataset, body.theta)
        return {"dataset": body.dataset, "theta": body.theta, "saved": True}

    @app.get("/api/image/{image_id}")
    def get_image(image_id: str):
        row = session.table.row_of_image_id.get(image_id)
        if row is None:
            raise HTTPException(404, f"unknown image {image_id!r}")
        path = session.table.records[row].path
        if not path or not os.path.isfile(path):
            raise HTTPException(404, f"no image file for {image_id!r}")
        media_type = mimetypes.guess_type(path)[0] or "application/octet-stream"
        return FileResponse(path, media_type=media_type)

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")
    return app
