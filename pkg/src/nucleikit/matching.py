"""Optimal one-to-one matching of detections to annotations, and the derived metrics.

The matching maximizes the number of pairs within the distance cap and,
among those, minimizes the total matched distance. This is realized as a
linear assignment over a cost matrix holding the micron distance for
feasible pairs and a sentinel larger than any feasible total elsewhere;
sentinel assignments are discarded afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .detect import DetectionSet
from .model import AnnotationSet, ValidationError


@dataclass(frozen=True)
class MatchResult:
    """One-to-one pairing under the cap, with TP/FP/FN counts.

    pairs holds (detection index, annotation index, distance in microns).
    """

    pairs: tuple[tuple[int, int, float], ...]
    tp: int
    fp: int
    fn: int
    cap_um: float

    def __post_init__(self):
        if self.tp != len(self.pairs):
            raise ValidationError(f"tp={self.tp} disagrees with {len(self.pairs)} pairs")
        if self.fp < 0 or self.fn < 0:
            raise ValidationError("fp and fn must be non-negative")
        if any(d > self.cap_um for (_, _, d) in self.pairs):
            raise ValidationError(f"a matched pair exceeds the {self.cap_um} um cap")
        for side in (0, 1):
            indices = [p[side] for p in self.pairs]
            if len(set(indices)) != len(indices):
                raise ValidationError("a detection or annotation appears in more than one pair")

    @property
    def total_distance_um(self) -> float:
        return float(sum(d for (_, _, d) in self.pairs))


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def pairwise_distances_um(detections: DetectionSet, annotations: AnnotationSet) -> np.ndarray:
    """(n_det, n_gt) Euclidean distances in microns."""
    mpp = annotations.resolution.microns_per_pixel
    dx = detections.xs[:, np.newaxis] - annotations.xy[np.newaxis, :, 0]
    dy = detections.ys[:, np.newaxis] - annotations.xy[np.newaxis, :, 1]
    return np.sqrt(dx * dx + dy * dy) * mpp


def match_hungarian(detections: DetectionSet, annotations: AnnotationSet, cap_um: float = 5.0) -> MatchResult:
    """Match detections to annotations, cardinality first, then total distance."""
    if cap_um <= 0:
        raise ValidationError(f"cap_um must be > 0, got {cap_um}")
    if detections.resolution != annotations.resolution:
        raise ValidationError(
            f"resolution mismatch: detections at {detections.resolution.microns_per_pixel} um/px, "
            f"annotations at {annotations.resolution.microns_per_pixel} um/px"
        )
    n_det = len(detections)
    n_gt = len(annotations)
    if n_det == 0 or n_gt == 0:
        return MatchResult(pairs=(), tp=0, fp=n_det, fn=n_gt, cap_um=cap_um)

    dist = pairwise_distances_um(detections, annotations)
    feasible = dist <= cap_um
    sentinel = cap_um * (min(n_det, n_gt) + 1) + 1.0
    cost = np.where(feasible, dist, sentinel)
    rows, cols = linear_sum_assignment(cost)
    pairs = tuple(
        (int(r), int(c), float(dist[r, c])) for r, c in zip(rows, cols) if feasible[r, c]
    )
    tp = len(pairs)
    return MatchResult(pairs=pairs, tp=tp, fp=n_det - tp, fn=n_gt - tp, cap_um=cap_um)


def metrics_from_counts(tp: int, fp: int, fn: int) -> Metrics:
    """Precision, recall, and f1 = 2tp / (2tp + fp + fn).

    Empty-vs-empty counts as perfect; a vacuous denominator on one side
    yields 1.0 there and 0.0 overall.
    """
    precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 1.0
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom > 0 else 1.0
    return Metrics(precision=precision, recall=recall, f1=f1)


def compute_metrics(result: MatchResult) -> Metrics:
    return metrics_from_counts(result.tp, result.fp, result.fn)


def aggregate_micro(results: Iterable[MatchResult]) -> Metrics:
    """Micro-average: sum TP/FP/FN over images, then compute the metrics."""
    results = list(results)
    if not results:
        raise ValidationError("cannot aggregate an empty list of match results")
    caps = {r.cap_um for r in results}
    if len(caps) != 1:
        raise ValidationError(f"cannot aggregate results with mixed caps: {sorted(caps)}")
    return metrics_from_counts(
        sum(r.tp for r in results),
        sum(r.fp for r in results),
        sum(r.fn for r in results),
    )
