"""Zero-shot classification and retrieval evaluation.

Inference ignores the training bias: test features are scored against the
reconstructed unseen prototypes by cosine similarity (or raw inner product)
and assigned to the best-scoring class. Retrieval uses each unseen class's
prototype as a query over the unseen test gallery.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .linalg import ShapeError, normalize_rows
from .model import reconstruct_prototypes


@dataclass
class EvalReport:
    per_class_accuracy: list
    mean_accuracy: float
    per_class_ap: list
    map: float
    pr_curves: list
    confusion: list

    def to_json(self, path=None, **extra):
        payload = {**extra, **asdict(self)}
        text = json.dumps(payload, indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


def unweighted_mean(values):
    values = list(values)
    return math.fsum(values) / len(values)


def cosine_scores(features, prototypes):
    """Cosine similarity between every feature row and every prototype row.

    A zero-norm operand scores 0.
    """
    features = np.asarray(features, dtype=np.float64)
    prototypes = np.asarray(prototypes, dtype=np.float64)
    if features.shape[1] != prototypes.shape[1]:
        raise ShapeError(f"features {features.shape} vs prototypes {prototypes.shape}")
    return normalize_rows(features) @ normalize_rows(prototypes).T


def inner_scores(features, prototypes):
    features = np.asarray(features, dtype=np.float64)
    prototypes = np.asarray(prototypes, dtype=np.float64)
    if features.shape[1] != prototypes.shape[1]:
        raise ShapeError(f"features {features.shape} vs prototypes {prototypes.shape}")
    return features @ prototypes.T


def classify(scores):
    """Row-wise argmax; ties go to the lowest column index."""
    scores = np.asarray(scores)
    if scores.size == 0:
        raise ValueError("empty score matrix")
    return np.argmax(scores, axis=1)


def per_class_top1(pred, truth, num_classes):
    """Per-class accuracy and its unweighted mean over classes.

    >>> acc, mean = per_class_top1([0, 0, 0, 0], [0, 0, 0, 1], 2)
    >>> acc.tolist(), mean
    ([1.0, 0.0], 0.5)
    """
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ShapeError(f"pred {pred.shape} vs truth {truth.shape}")
    if truth.size and (truth.min() < 0 or truth.max() >= num_classes):
        raise ValueError(f"truth labels outside [0, {num_classes})")
    counts = np.bincount(truth, minlength=num_classes)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ValueError(f"class {empty[0]} has no test instances")
    correct = np.bincount(truth[pred == truth], minlength=num_classes)
    acc = correct / counts
    return acc, unweighted_mean(acc)


def confusion_matrix(pred, truth, num_classes):
    out = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(out, (np.asarray(truth), np.asarray(pred)), 1)
    return out


def _ranked_relevance(scores, relevance):
    scores = np.asarray(scores, dtype=np.float64)
    relevance = np.asarray(relevance, dtype=bool)
    if scores.shape != relevance.shape or scores.ndim != 1:
        raise ShapeError(f"scores {scores.shape} vs relevance {relevance.shape}")
    if not relevance.any():
        raise ValueError("no relevant items in gallery")
    # stable sort on negated scores: ties keep ascending gallery index
    order = np.argsort(-scores, kind="stable")
    return relevance[order]


def retrieval_ap(scores, relevance):
    """Non-interpolated average precision of a ranked gallery.

    >>> retrieval_ap([0.9, 0.5, 0.1], [True, False, True])
    0.8333333333333333
    """
    ranked = _ranked_relevance(scores, relevance)
    hits = np.cumsum(ranked)
    ranks = np.flatnonzero(ranked) + 1
    return float(np.sum(hits[ranked] / ranks) / ranks.size)


def pr_curve(scores, relevance):
    """One ``(recall, precision)`` pair per rank ``k = 1..n``."""
    ranked = _ranked_relevance(scores, relevance)
    hits = np.cumsum(ranked)
    k = np.arange(1, ranked.size + 1)
    recall = hits / hits[-1]
    precision = hits / k
    return list(zip(recall.tolist(), precision.tolist()))


def _retrieval(scores, truth, num_classes):
    aps, curves = [], []
    for j in range(num_classes):
        rel = truth == j
        aps.append(retrieval_ap(scores[:, j], rel))
        curves.append([list(pt) for pt in pr_curve(scores[:, j], rel)])
    return aps, curves


def report_from_scores(scores, truth, num_classes):
    """Build an :class:`EvalReport` from a (test x class) score matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    pred = classify(scores)
    acc, mean = per_class_top1(pred, truth, num_classes)
    aps, curves = _retrieval(scores, truth, num_classes)
    return EvalReport(
        per_class_accuracy=acc.tolist(),
        mean_accuracy=mean,
        per_class_ap=aps,
        map=unweighted_mean(aps),
        pr_curves=curves,
        confusion=confusion_matrix(pred, truth, num_classes).tolist(),
    )


def unseen_scores(params, dataset, similarity="cosine"):
    prototypes = reconstruct_prototypes(params.V, dataset.unseen_descriptors)
    if similarity == "cosine":
        return cosine_scores(dataset.test_features, prototypes)
    if similarity == "inner":
        return inner_scores(dataset.test_features, prototypes)
    raise ValueError(f"unknown similarity {similarity!r}")


def evaluate(params, dataset, similarity="cosine"):
    """Full zero-shot classification and retrieval report on the unseen split."""
    return report_from_scores(
        unseen_scores(params, dataset, similarity), dataset.test_labels, dataset.num_unseen
    )


def retrieval_map(params, dataset, similarity="cosine"):
    """Per-class AP, mAP and PR curves, querying with each unseen prototype."""
    scores = unseen_scores(params, dataset, similarity)
    aps, curves = _retrieval(scores, np.asarray(dataset.test_labels), dataset.num_unseen)
    return {"per_class_ap": aps, "map": unweighted_mean(aps), "pr_curves": curves}


def prototype_diagnostic(params, dataset):
    """Distance from each unseen prototype to the mean of its class's test features."""
    prototypes = reconstruct_prototypes(params.V, dataset.unseen_descriptors)
    truth = np.asarray(dataset.test_labels)
    out = np.empty(dataset.num_unseen)
    for j in range(dataset.num_unseen):
        center = dataset.test_features[truth == j].mean(axis=0)
        out[j] = np.linalg.norm(prototypes[j] - center)
    return out


def write_diagnostic_csv(path, distances):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "distance"])
        for j, d in enumerate(distances):
            w.writerow([j, repr(float(d))])


def write_pr_csv(path, curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "recall", "precision"])
        for k, (r, p) in enumerate(curve, start=1):
            w.writerow([k, repr(r), repr(p)])


def write_pr_svg(path, curve, title="", size=320, pad=36):
    """Minimal precision-recall line plot on the unit square."""
    span = size - 2 * pad

    def xy(r, p):
        return pad + r * span, size - pad - p * span

    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(r, p) for r, p in curve))
    x0, y0 = xy(0, 0)
    x1, y1 = xy(1, 1)
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">
<rect width="{size}" height="{size}" fill="white"/>
<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>
<text x="{size / 2}" y="{size - 8}" text-anchor="middle" font-size="12">recall</text>
<text x="12" y="{size / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {size / 2})">precision</text>
<text x="{size / 2}" y="20" text-anchor="middle" font-size="13">{title}</text>
<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>
</svg>
"""
    Path(path).write_text(svg)
