"""Command-line entry point wiring all modules together.

Every command writes its outputs atomically (temp file + rename) and drops a
`<out>.manifest.json` next to each primary output with the resolved config and
input/output digests. Validation errors exit 1 with a single diagnostic line.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import click

from . import __version__
from .cluster import cluster_dataset, write_clusters
from .errors import WildsplitError
from .evalkit import evaluate
from .ingest import SplitConfig, load_embeddings, load_logits, load_metadata
from .quality import (
    dataset_stats,
    default_theta_grid,
    purity_table,
    threshold_sweep,
    tp_fp,
)
from .split import (
    build_split,
    load_split,
    random_split,
    verify_split,
    write_split,
)
from .synth import WorldSpec, generate_world, write_world


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path, data: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_via(path, write_fn) -> None:
    """Run write_fn against a temp path, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(out_path, command, config, seed, inputs, outputs) -> None:
    manifest = {
        "tool": "wildsplit",
        "version": __version__,
        "command": command,
        "resolved_config": config,
        "seed": seed,
        "inputs": {name: _sha256(p) for name, p in sorted(inputs.items())},
        "outputs": {name: _sha256(p) for name, p in sorted(outputs.items())},
    }
    _atomic_write(
        str(out_path) + ".manifest.json",
        json.dumps(manifest, indent=1, sort_keys=True) + "\n",
    )


def _load_config(config_path, seed=None, theta=None) -> SplitConfig:
    cfg = SplitConfig.from_json(config_path) if config_path else SplitConfig()
    if seed is not None:
        cfg.seed = seed
    if theta is not None:
        cfg.default_theta = theta
        SplitConfig.from_dict(cfg.to_dict())  # re-validate the override
    return cfg


def _fail(err: WildsplitError) -> None:
    click.echo(f"error: {type(err).__name__}: {err}", err=True)
    sys.exit(1)


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


@click.group()
@click.version_option(__version__)
def main():
    """Leakage-free re-identification splits and open-set evaluation."""


_metadata_opt = click.option("--metadata", required=True, type=click.Path(exists=True))
_embeddings_opt = click.option("--embeddings", required=True, type=click.Path(exists=True))
_config_opt = click.option("--config", "config_path", type=click.Path(exists=True))
_seed_opt = click.option("--seed", type=int, default=None)
_out_opt = click.option("--out", required=True, type=click.Path())
_threads_opt = click.option("--threads", type=int, default=None)


def _n_threads(threads):
    return threads if threads and threads > 0 else (os.cpu_count() or 1)


@main.command("split")
@_metadata_opt
@_embeddings_opt
@_config_opt
@_seed_opt
@_out_opt
@_threads_opt
def cmd_split(metadata, embeddings, config_path, seed, out, threads):
    """Build the leakage-free train/test split."""
    try:
        cfg = _load_config(config_path, seed)
        table = load_metadata(metadata)
        emb = load_embeddings(embeddings, len(table))
        assignment, summary = build_split(table, emb, cfg, threads=_n_threads(threads))
        out = Path(out)
        summary_path = out.with_suffix(".summary.json")
        _atomic_via(out, lambda p: write_split(p, table, assignment))
        _atomic_write(summary_path, _json_dump(summary))
        _write_manifest(
            out,
            "split",
            cfg.to_dict(),
            cfg.seed,
            {"metadata": metadata, "embeddings": embeddings},
            {"split": out, "summary": summary_path},
        )
    except WildsplitError as err:
        _fail(err)


@main.command("random-split")
@_metadata_opt
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0)
@_out_opt
def cmd_random_split(metadata, split_path, seed, out):
    """Random baseline split with the reference's per-identity counts."""
    try:
        table = load_metadata(metadata)
        reference = load_split(split_path, table)
        assignment = random_split(table, reference, seed)
        out = Path(out)
        _atomic_via(out, lambda p: write_split(p, table, assignment))
        _write_manifest(
            out,
            "random-split",
            {"seed": seed},
            seed,
            {"metadata": metadata, "split": split_path},
            {"split": out},
        )
    except WildsplitError as err:
        _fail(err)


@main.command("cluster")
@_metadata_opt
@_embeddings_opt
@_config_opt
@click.option("--theta", type=float, default=None)
@click.option("--dataset", default=None, help="restrict to one dataset")
@_out_opt
@_threads_opt
def cmd_cluster(metadata, embeddings, config_path, theta, dataset, out, threads):
    """Threshold-stopped single-linkage clusters per identity."""
    try:
        cfg = _load_config(config_path, theta=theta)
        table = load_metadata(metadata)
        emb = load_embeddings(embeddings, len(table))
        datasets = [dataset] if dataset else table.datasets
        assignments = []
        for ds in datasets:
            assignments.extend(
                cluster_dataset(table, ds, emb, cfg, threads=_n_threads(threads))
            )
        out = Path(out)
        _atomic_via(out, lambda p: write_clusters(p, table, assignments))
        _write_manifest(
            out,
            "cluster",
            cfg.to_dict(),
            cfg.seed,
            {"metadata": metadata, "embeddings": embeddings},
            {"clusters": out},
        )
    except WildsplitError as err:
        _fail(err)


@main.command("sweep")
@_metadata_opt
@_embeddings_opt
@click.option("--dataset", default=None, help="default: all timestamped datasets")
@click.option("--theta-min", type=float, default=0.90)
@click.option("--theta-max", type=float, default=1.00)
@click.option("--theta-step", type=float, default=0.001)
@_out_opt
def cmd_sweep(metadata, embeddings, dataset, theta_min, theta_max, theta_step, out):
    """TP/FP across a theta grid (timestamped data only)."""
    try:
        table = load_metadata(metadata)
        emb = load_embeddings(embeddings, len(table))
        if dataset:
            if dataset not in table.by_dataset:
                from .errors import UnknownDataset

                raise UnknownDataset(dataset)
            datasets = [dataset]
        else:
            datasets = [ds for ds in table.datasets if table.timestamped[ds]]
        identity_indices = {
            key: rows
            for key, rows in table.by_identity.items()
            if key[0] in datasets
        }
        dates = [rec.date for rec in table.records]
        grid = default_theta_grid(theta_min, theta_max, theta_step)
        points = threshold_sweep(identity_indices, emb, dates, grid)
        body = "theta,tp,fp\n" + "".join(
            f"{p.theta:.6f},{p.tp},{p.fp}\n" for p in points
        )
        out = Path(out)
        _atomic_write(out, body)
        _write_manifest(
            out,
            "sweep",
            {"theta_min": theta_min, "theta_max": theta_max, "theta_step": theta_step},
            0,
            {"metadata": metadata, "embeddings": embeddings},
            {"sweep": out},
        )
    except WildsplitError as err:
        _fail(err)


@main.command("quality")
@_metadata_opt
@_embeddings_opt
@_config_opt
@click.option("--theta", type=float, default=None)
@click.option("--dataset", required=True)
@_out_opt
def cmd_quality(metadata, embeddings, config_path, theta, dataset, out):
    """TP/FP and purity table for one dataset at one theta."""
    try:
        cfg = _load_config(config_path, theta=theta)
        table = load_metadata(metadata)
        emb = load_embeddings(embeddings, len(table))
        assignments = cluster_dataset(table, dataset, emb, cfg)
        clusters = [c for a in assignments for c in a.clusters]
        dates = [rec.date for rec in table.records]
        body: dict = {"dataset": dataset, "theta": cfg.theta_for(dataset)}
        if table.timestamped[dataset]:
            tp, fp = tp_fp(clusters, dates)
            body.update(tp=tp, fp=fp, purity=purity_table(clusters, dates))
        else:
            body.update(tp=None, fp=None, purity=None)
        body["cluster_sizes"] = sorted((len(c) for c in clusters), reverse=True)
        out = Path(out)
        _atomic_write(out, _json_dump(body))
        _write_manifest(
            out,
            "quality",
            cfg.to_dict(),
            cfg.seed,
            {"metadata": metadata, "embeddings": embeddings},
            {"quality": out},
        )
    except WildsplitError as err:
        _fail(err)


@main.command("eval")
@_metadata_opt
@_embeddings_opt
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option(
    "--scorer",
    type=click.Choice(["knn", "nms", "msp", "mls"]),
    default="knn",
)
@click.option("--logits", type=click.Path(exists=True), default=None)
@click.option("--classes", type=click.Path(exists=True), default=None)
@click.option("--t-new", type=float, default=None)
@_out_opt
@_threads_opt
def cmd_eval(metadata, embeddings, split_path, scorer, logits, classes, t_new, out, threads):
    """Closed-set, open-set, and detection metrics for a split."""
    del threads  # scoring is vectorized; flag kept for interface stability
    try:
        table = load_metadata(metadata)
        emb = load_embeddings(embeddings, len(table))
        assignment = load_split(split_path, table)
        logit_matrix = class_list = None
        if scorer in ("msp", "mls"):
            if not logits or not classes:
                raise WildsplitError(f"scorer {scorer!r} needs --logits and --classes")
            logit_matrix, class_list = load_logits(logits, classes, len(table))
        report = evaluate(
            table, emb, assignment, scorer, logit_matrix, class_list, t_new
        )
        out = Path(out)
        _atomic_write(out, _json_dump(report))
        inputs = {"metadata": metadata, "embeddings": embeddings, "split": split_path}
        if logits:
            inputs.update(logits=logits, classes=classes)
        _write_manifest(
            out, "eval", {"scorer": scorer, "t_new": t_new}, 0, inputs, {"report": out}
        )
    except WildsplitError as err:
        _fail(err)


@main.command("stats")
@_metadata_opt
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@_out_opt
def cmd_stats(metadata, split_path, out):
    """Per split-side imbalance statistics."""
    try:
        table = load_metadata(metadata)
        assignment = load_split(split_path, table)
        out = Path(out)
        _atomic_write(out, _json_dump(dataset_stats(table, assignment)))
        _write_manifest(
            out,
            "stats",
            {},
            0,
            {"metadata": metadata, "split": split_path},
            {"stats": out},
        )
    except WildsplitError as err:
        _fail(err)


@main.command("synth")
@click.option("--out", "outdir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@click.option("--datasets", type=int, default=2)
@click.option("--identities", type=int, default=20)
@click.option("--images-mean", type=float, default=6.0)
@click.option("--encounters-mean", type=float, default=2.5)
@click.option("--dim", type=int, default=64)
@click.option("--sigma-id", type=float, default=1.0)
@click.option("--sigma-enc", type=float, default=0.15)
@click.option("--sigma-img", type=float, default=0.01)
@click.option(
    "--timestamped",
    default=None,
    help="comma list of 0/1 flags, one per dataset (default: alternating)",
)
def cmd_synth(
    outdir,
    seed,
    datasets,
    identities,
    images_mean,
    encounters_mean,
    dim,
    sigma_id,
    sigma_enc,
    sigma_img,
    timestamped,
):
    """Generate a synthetic world (metadata + embeddings + truth sidecar)."""
    try:
        flags: tuple[bool, ...] = ()
        if timestamped:
            flags = tuple(part.strip() == "1" for part in timestamped.split(","))
        spec = WorldSpec(
            seed=seed,
            n_datasets=datasets,
            identities_per_dataset=identities,
            images_per_identity_mean=images_mean,
            encounters_per_identity_mean=encounters_mean,
            embedding_dim=dim,
            identity_spread=sigma_id,
            encounter_spread=sigma_enc,
            image_noise=sigma_img,
            timestamped=flags,
        )
        world = generate_world(spec)
        paths = write_world(world, outdir)
        manifest_anchor = Path(outdir) / "world"
        _write_manifest(
            manifest_anchor,
            "synth",
            {k: v for k, v in vars(spec).items() if k != "timestamped"}
            | {"timestamped": list(spec.timestamped)},
            seed,
            {},
            paths,
        )
        click.echo(json.dumps(paths))
    except WildsplitError as err:
        _fail(err)


@main.command("verify")
@_metadata_opt
@_embeddings_opt
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@_config_opt
@click.option("--out", type=click.Path(), default=None)
def cmd_verify(metadata, embeddings, split_path, config_path, out):
    """Check leakage invariants; exits 0 iff the split is violation-free."""
    try:
        cfg = _load_config(config_path)
        table = load_metadata(metadata)
        emb = load_embeddings(embeddings, len(table))
        assignment = load_split(split_path, table)
        report = verify_split(table, emb, assignment, cfg)
        body = _json_dump(report.to_dict())
        if out:
            _atomic_write(out, body)
        click.echo(body, nl=False)
        sys.exit(0 if report.total() == 0 else 1)
    except WildsplitError as err:
        _fail(err)


@main.command("serve")
@_metadata_opt
@_embeddings_opt
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=8787)
@click.option("--host", default="127.0.0.1")
@click.option("--static", "static_dir", type=click.Path(exists=True), default=None)
def cmd_serve(metadata, embeddings, config_path, port, host, static_dir):
    """Threshold-tuning workbench API (plus optional static bundle)."""
    try:
        import uvicorn

        from .serve import SessionState, create_app

        session = SessionState.load(metadata, embeddings, config_path)
        app = create_app(session, static_dir=static_dir)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except WildsplitError as err:
        _fail(err)


if __name__ == "__main__":
    main()
