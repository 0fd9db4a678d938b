"""Posterior-map post-processing into detected nuclei centers.

Cells are estimated by thresholding the summed background and edge
posteriors, then each 4-connected cell contributes the pixel maximizing
the center posterior. No fixed local-maxima kernel is involved, so cells
of arbitrary size yield exactly one candidate each.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .model import (
    AnnotationError,
    PosteriorMap,
    ResolutionSpec,
    Thresholds,
    ValidationError,
)

DETECTION_HEADER = ("x_px", "y_px", "score")

# 4-neighborhood, consistent with the label masks' edge rasterization.
_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class EstimatedCells:
    """Connected components of the low background+edge region.

    labels holds 0 outside any component and 1..count inside, numbered by
    the row-major position of each component's first pixel.
    """

    labels: np.ndarray  # (h, w) int32
    count: int

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.labels))


@dataclass(frozen=True)
class DetectionSet:
    """Detected centers (pixel-center coordinates) with their scores."""

    xs: np.ndarray      # (n,) float64
    ys: np.ndarray      # (n,) float64
    scores: np.ndarray  # (n,) float64 in [0, 1]
    resolution: ResolutionSpec

    def __post_init__(self):
        xs = np.ascontiguousarray(self.xs, dtype=np.float64)
        ys = np.ascontiguousarray(self.ys, dtype=np.float64)
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        if not (xs.shape == ys.shape == scores.shape) or xs.ndim != 1:
            raise ValidationError("xs, ys, scores must be 1-D arrays of equal length")
        if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValidationError("detection scores must lie in [0, 1]")
        for name, arr in (("xs", xs), ("ys", ys), ("scores", scores)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.xs.shape[0])


def estimate_cells(posteriors: PosteriorMap, kappa_e: float) -> EstimatedCells:
    """4-connected components of {pixels with background+edge strictly below kappa_e}."""
    if not (0.0 < kappa_e < 1.0):
        raise ValidationError(f"kappa_e must lie strictly inside (0, 1), got {kappa_e}")
    summed = posteriors.background.astype(np.float64) + posteriors.edge.astype(np.float64)
    mask = summed < kappa_e
    raw, count = ndimage.label(mask, structure=_STRUCTURE_4)
    if count == 0:
        return EstimatedCells(labels=np.zeros(mask.shape, dtype=np.int32), count=0)
    # Renumber so label k has the k-th smallest row-major first-pixel index;
    # the contract must hold regardless of how the labeling pass ordered them.
    flat = raw.ravel()
    nonzero = np.flatnonzero(flat)
    values, first = np.unique(flat[nonzero], return_index=True)
    order = np.argsort(nonzero[first], kind="stable")
    lut = np.zeros(count + 1, dtype=np.int32)
    lut[values[order]] = np.arange(1, count + 1, dtype=np.int32)
    return EstimatedCells(labels=lut[raw], count=int(count))


def center_candidates(
    posteriors: PosteriorMap, kappa_e: float
) -> tuple[EstimatedCells, list[tuple[int, int, float]]]:
    """Per-cell maxima of the center posterior, before any score cut.

    Returns (cells, candidates); each candidate is (x, y, score) at the
    pixel of maximal center posterior within its cell, ties resolved to
    the lowest (y, x) in lexicographic order.
    """
    cells = estimate_cells(posteriors, kappa_e)
    if cells.count == 0:
        return cells, []
    w = cells.labels.shape[1]
    flat_labels = cells.labels.ravel()
    flat_scores = posteriors.center.ravel()
    order = np.argsort(flat_labels, kind="stable")
    starts = np.searchsorted(flat_labels[order], np.arange(1, cells.count + 2))
    candidates: list[tuple[int, int, float]] = []
    for k in range(cells.count):
        members = order[starts[k]:starts[k + 1]]  # raster-ordered pixel indices of cell k+1
        best = members[np.argmax(flat_scores[members])]
        y, x = divmod(int(best), w)
        candidates.append((x, y, float(flat_scores[best])))
    return cells, candidates


def detect_centers(
    posteriors: PosteriorMap, thresholds: Thresholds, resolution: ResolutionSpec
) -> DetectionSet:
    """Detected centers: per-cell maxima kept when their score reaches kappa_c.

    Rejection is strictly below kappa_c, so a candidate scoring exactly
    kappa_c is kept. Coordinates are pixel centers (x + 0.5, y + 0.5).
    """
    _, candidates = center_candidates(posteriors, thresholds.kappa_e)
    kept = [(x, y, s) for (x, y, s) in candidates if s >= thresholds.kappa_c]
    xs = np.asarray([x + 0.5 for (x, _, _) in kept], dtype=np.float64)
    ys = np.asarray([y + 0.5 for (_, y, _) in kept], dtype=np.float64)
    scores = np.asarray([s for (_, _, s) in kept], dtype=np.float64)
    return DetectionSet(xs=xs, ys=ys, scores=scores, resolution=resolution)


def write_detections(detections: DetectionSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DETECTION_HEADER)
        for x, y, s in zip(detections.xs, detections.ys, detections.scores):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(s))])


def read_detections(path: str | Path, resolution: ResolutionSpec) -> DetectionSet:
    path = Path(path)
    if not path.is_file():
        raise AnnotationError(f"detection file not found: {path}")
    xs: list[float] = []
    ys: list[float] = []
    scores: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != DETECTION_HEADER:
            raise AnnotationError(f"{path}: expected header x_px,y_px,score")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise AnnotationError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
                scores.append(float(row[2]))
            except ValueError as exc:
                raise AnnotationError(f"{path}: line {lineno}: unparseable row {row!r}: {exc}") from None
    return DetectionSet(
        xs=np.asarray(xs), ys=np.asarray(ys), scores=np.asarray(scores), resolution=resolution
    )
