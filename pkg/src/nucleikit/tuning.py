"""Grid search over the two detection thresholds, maximizing validation micro-f1."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .detect import DetectionSet, center_candidates
from .matching import Metrics, aggregate_micro, match_hungarian
from .model import AnnotationSet, PosteriorMap, Thresholds, ValidationError


def default_grid_values() -> tuple[float, ...]:
    return tuple(i / 20 for i in range(1, 20))  # 0.05 .. 0.95


@dataclass(frozen=True)
class GridSpec:
    """Candidate threshold values: non-empty, strictly increasing, inside (0, 1)."""

    kappa_e_values: tuple[float, ...] = field(default_factory=default_grid_values)
    kappa_c_values: tuple[float, ...] = field(default_factory=default_grid_values)

    def __post_init__(self):
        for name in ("kappa_e_values", "kappa_c_values"):
            values = tuple(getattr(self, name))
            object.__setattr__(self, name, values)
            if not values:
                raise ValidationError(f"{name} must not be empty")
            if any(not (0.0 < v < 1.0) for v in values):
                raise ValidationError(f"{name} must lie strictly inside (0, 1)")
            if any(a >= b for a, b in zip(values, values[1:])):
                raise ValidationError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class GridPoint:
    kappa_e: float
    kappa_c: float
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def grid_search(
    validation: Sequence[tuple[PosteriorMap, AnnotationSet]],
    grid: GridSpec | None = None,
    cap_um: float = 5.0,
) -> tuple[Thresholds, Metrics, list[GridPoint]]:
    """Evaluate micro-f1 at every grid point and return the best thresholds.

    Candidates per cell do not depend on kappa_c, so they are extracted
    once per kappa_e and re-thresholded per kappa_c; this is exactly the
    detect_centers path. Ties break toward higher kappa_c, then higher
    kappa_e. The full table is returned for reporting.
    """
    grid = grid or GridSpec()
    if not validation:
        raise ValidationError("grid search requires a non-empty validation set")

    table: list[GridPoint] = []
    best: GridPoint | None = None
    for kappa_e in grid.kappa_e_values:
        per_image = [
            (center_candidates(pmap, kappa_e)[1], gt) for pmap, gt in validation
        ]
        for kappa_c in grid.kappa_c_values:
            results = []
            for candidates, gt in per_image:
                kept = [(x, y, s) for (x, y, s) in candidates if s >= kappa_c]
                detections = DetectionSet(
                    xs=np.asarray([x + 0.5 for (x, _, _) in kept]),
                    ys=np.asarray([y + 0.5 for (_, y, _) in kept]),
                    scores=np.asarray([s for (_, _, s) in kept]),
                    resolution=gt.resolution,
                )
                results.append(match_hungarian(detections, gt, cap_um))
            micro = aggregate_micro(results)
            tp = sum(r.tp for r in results)
            fp = sum(r.fp for r in results)
            fn = sum(r.fn for r in results)
            point = GridPoint(
                kappa_e=kappa_e, kappa_c=kappa_c, tp=tp, fp=fp, fn=fn,
                precision=micro.precision, recall=micro.recall, f1=micro.f1,
            )
            table.append(point)
            if (
                best is None
                or point.f1 > best.f1
                or (point.f1 == best.f1 and (point.kappa_c, point.kappa_e) > (best.kappa_c, best.kappa_e))
            ):
                best = point

    thresholds = Thresholds(kappa_e=best.kappa_e, kappa_c=best.kappa_c)
    metrics = Metrics(precision=best.precision, recall=best.recall, f1=best.f1)
    return thresholds, metrics, table
