"""Closed-set and open-set evaluation.

1-NN retrieval per dataset, novelty scorers (kNN max similarity, nearest
class centroid, max softmax probability, max logit), the t_new decision rule,
and the metric suite: mTop1/mTop5/BAKS, BAUS, normalized accuracy, AUROC,
TNR@95TPR, and the BAKS-BAUS sweep with its area.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import rankdata

from .errors import (
    BadLogits,
    DegenerateCentroid,
    EmptyGallery,
    Incomplete,
    Undefined,
)
from .ingest import EmbeddingMatrix, MetadataTable
from .split import TEST_KNOWN, TEST_NEW, TRAIN, SplitAssignment

NEW = "<new>"


@dataclass(frozen=True)
class Prediction:
    index: int
    identity: str           # predicted identity, or NEW after thresholding
    confidence: float
    top5: tuple[str, ...]   # distinct identities, descending score


def knn_predict(
    test_index: int,
    gallery_indices,
    embeddings: EmbeddingMatrix,
    identities,
) -> Prediction:
    """1-NN over the train gallery; confidence is the best cosine similarity.

    Identity score is its best train image; ties go to the lowest train row.
    """
    gallery = list(gallery_indices)
    if not gallery:
        raise EmptyGallery(f"no gallery for test row {test_index}")
    g = np.asarray(gallery, dtype=np.intp)
    sims = embeddings.values[g].astype(np.float64) @ embeddings.values[
        test_index
    ].astype(np.float64)
    best: dict[str, tuple[float, int]] = {}
    for pos, row in enumerate(gallery):
        s = float(sims[pos])
        ident = identities[row]
        if ident not in best or s > best[ident][0]:
            best[ident] = (s, row)
    ranked = sorted(best.items(), key=lambda kv: (-kv[1][0], kv[1][1]))
    top5 = tuple(ident for ident, _ in ranked[:5])
    return Prediction(test_index, ranked[0][0], ranked[0][1][0], top5)


def build_centroids(train_indices_by_identity: dict, embeddings: EmbeddingMatrix):
    """Re-normalized mean of each identity's train embeddings."""
    idents = sorted(train_indices_by_identity)
    mat = np.empty((len(idents), embeddings.dims), dtype=np.float64)
    for k, ident in enumerate(idents):
        rows = np.asarray(train_indices_by_identity[ident], dtype=np.intp)
        mean = embeddings.values[rows].astype(np.float64).mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm < 1e-12:
            raise DegenerateCentroid(ident)
        mat[k] = mean / norm
    return idents, mat


def nms_score(test_index: int, centroid_idents, centroid_matrix, embeddings):
    """Identity of the nearest class centroid and its cosine similarity."""
    sims = centroid_matrix @ embeddings.values[test_index].astype(np.float64)
    k = int(np.argmax(sims))
    return centroid_idents[k], float(sims[k])


def msp_score(logit_row) -> tuple[int, float]:
    """argmax class and max softmax probability (max-subtracted for stability)."""
    row = np.asarray(logit_row, dtype=np.float64)
    if not np.all(np.isfinite(row)):
        raise BadLogits("non-finite logit")
    k = int(np.argmax(row))
    e = np.exp(row - row[k])
    return k, float(1.0 / e.sum())


def mls_score(logit_row) -> tuple[int, float]:
    """argmax class and the raw maximum logit (unbounded)."""
    row = np.asarray(logit_row, dtype=np.float64)
    if not np.all(np.isfinite(row)):
        raise BadLogits("non-finite logit")
    k = int(np.argmax(row))
    return k, float(row[k])


def predict_open_set(prediction: Prediction, t_new: float) -> Prediction:
    """Keep the class when confidence >= t_new, else predict NEW (inclusive)."""
    if prediction.confidence >= t_new:
        return prediction
    return replace(prediction, identity=NEW)


def _grouped_test_rows(table: MetadataTable, split: SplitAssignment, label: str):
    """dataset -> identity -> test rows with the given label."""
    out: dict[str, dict[str, list[int]]] = {}
    for i, rec in enumerate(table.records):
        if split.labels[i] == label:
            out.setdefault(rec.dataset, {}).setdefault(rec.identity, []).append(i)
    return out


def closed_metrics(
    predictions: dict[int, Prediction], table: MetadataTable, split: SplitAssignment
) -> dict:
    """mTop1/mTop5/BAKS per dataset plus unweighted macro means."""
    grouped = _grouped_test_rows(table, split, TEST_KNOWN)
    per_dataset = {}
    for dataset in sorted(grouped):
        hit1 = hit5 = n = 0
        class_accs = []
        for ident in sorted(grouped[dataset]):
            rows = grouped[dataset][ident]
            correct = 0
            for i in rows:
                if i not in predictions:
                    raise Incomplete(f"missing prediction for test row {i}")
                p = predictions[i]
                if p.identity == ident:
                    hit1 += 1
                    correct += 1
                if ident in p.top5:
                    hit5 += 1
                n += 1
            class_accs.append(correct / len(rows))
        per_dataset[dataset] = {
            "top1": hit1 / n,
            "top5": hit5 / n,
            "baks": sum(class_accs) / len(class_accs),
        }
    macro = {
        m: (
            sum(v[m] for v in per_dataset.values()) / len(per_dataset)
            if per_dataset
            else None
        )
        for m in ("top1", "top5", "baks")
    }
    return {"per_dataset": per_dataset, "macro": macro}


def baus(
    open_predictions: dict[int, Prediction],
    table: MetadataTable,
    split: SplitAssignment,
) -> dict:
    """Mean over datasets of mean over unknown classes of the NEW fraction.

    Datasets without unknown classes are skipped in the macro mean.
    """
    grouped = _grouped_test_rows(table, split, TEST_NEW)
    per_dataset = {}
    for dataset in sorted(grouped):
        class_fracs = []
        for ident in sorted(grouped[dataset]):
            rows = grouped[dataset][ident]
            flagged = 0
            for i in rows:
                if i not in open_predictions:
                    raise Incomplete(f"missing prediction for test row {i}")
                if open_predictions[i].identity == NEW:
                    flagged += 1
            class_fracs.append(flagged / len(rows))
        per_dataset[dataset] = sum(class_fracs) / len(class_fracs)
    macro = sum(per_dataset.values()) / len(per_dataset) if per_dataset else None
    return {"per_dataset": per_dataset, "macro": macro}


def normalized_accuracy(baks_value: float, baus_value: float) -> float:
    return float(np.sqrt(baks_value * baus_value))


def auroc(known_scores, new_scores) -> float:
    """P(known > new) + 0.5 P(tie), via average ranks; known is positive."""
    known = np.asarray(known_scores, dtype=np.float64)
    new = np.asarray(new_scores, dtype=np.float64)
    if known.size == 0 or new.size == 0:
        raise Undefined("AUROC needs both known and new scores")
    ranks = rankdata(np.concatenate([known, new]), method="average")
    r_known = ranks[: known.size].sum()
    return float(
        (r_known - known.size * (known.size + 1) / 2.0) / (known.size * new.size)
    )


def tnr_at_tpr(known_scores, new_scores, tpr_floor: float = 0.95) -> float:
    """TNR on new scores at the largest threshold keeping TPR >= tpr_floor.

    Candidate thresholds are the observed scores plus -inf.
    """
    known = np.asarray(known_scores, dtype=np.float64)
    new = np.asarray(new_scores, dtype=np.float64)
    if known.size == 0 or new.size == 0:
        raise Undefined("TNR@TPR needs both known and new scores")
    candidates = np.unique(np.concatenate([known, new]))
    t_star = -np.inf
    for t in candidates[::-1]:
        if (known >= t).mean() >= tpr_floor:
            t_star = t
            break
    return float((new < t_star).mean())


def _baks_at(predictions, table, split, t_new) -> float:
    thresholded = {i: predict_open_set(p, t_new) for i, p in predictions.items()}
    return closed_metrics(thresholded, table, split)["macro"]["baks"]


def baks_baus_curve(
    predictions: dict[int, Prediction], table: MetadataTable, split: SplitAssignment
):
    """Sweep t_new over observed confidences (plus sentinels) -> points, area.

    Area is the trapezoidal integral of BAUS against ascending BAKS, with
    duplicate-BAKS points collapsed to their maximum BAUS.
    """
    known_rows = [i for i in predictions if split.labels[i] == TEST_KNOWN]
    new_rows = [i for i in predictions if split.labels[i] == TEST_NEW]
    confidences = sorted({predictions[i].confidence for i in predictions})
    if not confidences:
        raise Undefined("no scored predictions")
    thresholds = [confidences[0] - 1.0] + confidences + [confidences[-1] + 1.0]

    points = []
    for t in thresholds:
        thresholded = {i: predict_open_set(p, t) for i, p in predictions.items()}
        b_known = (
            closed_metrics(
                {i: thresholded[i] for i in known_rows}, table, split
            )["macro"]["baks"]
            if known_rows
            else None
        )
        b_new = (
            baus({i: thresholded[i] for i in new_rows}, table, split)["macro"]
            if new_rows
            else None
        )
        norm = (
            normalized_accuracy(b_known, b_new)
            if b_known is not None and b_new is not None
            else None
        )
        points.append(
            {"t_new": t, "baks": b_known, "baus": b_new, "normalized": norm}
        )

    area = None
    usable = [p for p in points if p["baks"] is not None and p["baus"] is not None]
    if len(usable) >= 2:
        collapsed: dict[float, float] = {}
        for p in usable:
            b = p["baks"]
            collapsed[b] = max(collapsed.get(b, 0.0), p["baus"])
        xs = sorted(collapsed)
        ys = [collapsed[x] for x in xs]
        area = float(np.trapezoid(ys, xs))
    return points, area


def score_all(
    table: MetadataTable,
    embeddings: EmbeddingMatrix,
    split: SplitAssignment,
    scorer: str,
    logits: EmbeddingMatrix | None = None,
    classes: list[str] | None = None,
) -> dict[int, Prediction]:
    """One scored Prediction per test image (test_known and test_new).

    The gallery is per dataset: a test image only competes against train
    images of its own dataset.
    """
    test_rows = [
        i for i, l in enumerate(split.labels) if l in (TEST_KNOWN, TEST_NEW)
    ]
    identities = [rec.identity for rec in table.records]
    predictions: dict[int, Prediction] = {}

    if scorer in ("msp", "mls"):
        if logits is None or classes is None:
            raise Undefined(f"scorer {scorer!r} requires logits and classes")
        score = msp_score if scorer == "msp" else mls_score
        for i in test_rows:
            k, t = score(logits.values[i])
            ident = classes[k]
            predictions[i] = Prediction(i, ident, t, (ident,))
        return predictions

    train_by_dataset: dict[str, list[int]] = {}
    for i, l in enumerate(split.labels):
        if l == TRAIN:
            train_by_dataset.setdefault(table.records[i].dataset, []).append(i)

    if scorer == "knn":
        for i in test_rows:
            gallery = train_by_dataset.get(table.records[i].dataset, [])
            predictions[i] = knn_predict(i, gallery, embeddings, identities)
    elif scorer == "nms":
        centroid_cache: dict[str, tuple] = {}
        for i in test_rows:
            dataset = table.records[i].dataset
            if dataset not in centroid_cache:
                by_ident: dict[str, list[int]] = {}
                for g in train_by_dataset.get(dataset, []):
                    by_ident.setdefault(identities[g], []).append(g)
                if not by_ident:
                    raise EmptyGallery(f"no train images in dataset {dataset!r}")
                centroid_cache[dataset] = build_centroids(by_ident, embeddings)
            idents, mat = centroid_cache[dataset]
            ident, t = nms_score(i, idents, mat, embeddings)
            predictions[i] = Prediction(i, ident, t, (ident,))
    else:
        raise Undefined(f"unknown scorer {scorer!r}")
    return predictions


def evaluate(
    table: MetadataTable,
    embeddings: EmbeddingMatrix,
    split: SplitAssignment,
    scorer: str = "knn",
    logits: EmbeddingMatrix | None = None,
    classes: list[str] | None = None,
    t_new: float | None = None,
) -> dict:
    """Full metric report: closed-set, detection, optional t_new point, sweep."""
    predictions = score_all(table, embeddings, split, scorer, logits, classes)
    known_rows = [i for i in predictions if split.labels[i] == TEST_KNOWN]
    new_rows = [i for i in predictions if split.labels[i] == TEST_NEW]

    report: dict = {"scorer": scorer}
    if known_rows:
        report["closed_set"] = closed_metrics(
            {i: predictions[i] for i in known_rows}, table, split
        )
    else:
        report["closed_set"] = None

    known_scores = [predictions[i].confidence for i in known_rows]
    new_scores = [predictions[i].confidence for i in new_rows]
    if known_scores and new_scores:
        report["detection"] = {
            "auroc": auroc(known_scores, new_scores),
            "tnr_at_95tpr": tnr_at_tpr(known_scores, new_scores),
        }
    else:
        report["detection"] = None

    if t_new is not None:
        thresholded = {i: predict_open_set(p, t_new) for i, p in predictions.items()}
        point: dict = {"t_new": t_new}
        point["baks"] = (
            closed_metrics({i: thresholded[i] for i in known_rows}, table, split)[
                "macro"
            ]["baks"]
            if known_rows
            else None
        )
        point["baus"] = (
            baus({i: thresholded[i] for i in new_rows}, table, split)["macro"]
            if new_rows
            else None
        )
        if point["baks"] is not None and point["baus"] is not None:
            point["normalized"] = normalized_accuracy(point["baks"], point["baus"])
        report["at_t_new"] = point

    points, area = baks_baus_curve(predictions, table, split)
    report["sweep"] = points
    report["curve_area"] = area
    return report
