"""Voronoi expansion of point annotations into four-class label masks.

Pixels are sampled at their integer coordinates. Distance comparisons are
carried out on squared distances, which is exact for the strict-inequality
background rule and avoids square-root rounding at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    BACKGROUND,
    CENTER,
    EDGE,
    OBJECT,
    AnnotationSet,
    LabelMask,
    ValidationError,
    WeightMap,
)

# Cap on the number of float64 entries held per distance-stack chunk.
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class LabelParams:
    """Mask-generation knobs.

    Cell connectivity is fixed at the 4-neighborhood. Class weights follow
    the label-code order (background, object, edge, center).
    """

    center_radius_px: float = 2.0
    class_weights: tuple[float, float, float, float] = (1.0, 1.0, 5.0, 10.0)

    def __post_init__(self):
        if not self.center_radius_px > 0:
            raise ValidationError(f"center_radius_px must be > 0, got {self.center_radius_px}")
        if len(self.class_weights) != 4 or any(w < 0 for w in self.class_weights):
            raise ValidationError("class_weights must be four non-negative values")


@dataclass(frozen=True)
class CellIndexMap:
    """Per-pixel index of the nearest annotated center (ties: lowest index)."""

    indices: np.ndarray  # (h, w) int32
    n_cells: int

    def __post_init__(self):
        indices = np.ascontiguousarray(self.indices, dtype=np.int32)
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)


@dataclass(frozen=True)
class NeighborDistances:
    """Per-cell neighborhood structure on the rasterized diagram.

    max_distance_px[i] is the largest center-to-center distance from cell i
    to any cell sharing a 4-adjacent pixel pair with it, +inf when cell i
    has no neighbor inside the image. max_distance_sq_px carries the same
    quantity squared, which the background rule compares against exactly.
    """

    max_distance_px: np.ndarray      # (n,) float64, +inf sentinel
    max_distance_sq_px: np.ndarray   # (n,) float64, +inf sentinel
    neighbors: tuple[tuple[int, ...], ...]


def _row_chunks(height: int, width: int, n_centers: int):
    rows = max(1, _CHUNK_BUDGET // max(1, width * n_centers))
    for y0 in range(0, height, rows):
        yield y0, min(height, y0 + rows)


def assign_cells(annotations: AnnotationSet) -> CellIndexMap:
    """Label every pixel with the index of its nearest annotated center.

    Exact nearest-neighbor assignment: squared Euclidean distances in
    float64, first minimum winning, so ties resolve to the lowest
    annotation index.
    """
    n = len(annotations)
    if n == 0:
        raise ValidationError("cannot assign cells for an empty annotation set")
    w, h = annotations.image_dims
    cx = annotations.xy[:, 0]
    cy = annotations.xy[:, 1]
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    out = np.empty((h, w), dtype=np.int32)
    for y0, y1 in _row_chunks(h, w, n):
        dx = xs[np.newaxis, np.newaxis, :] - cx[:, np.newaxis, np.newaxis]
        dy = ys[y0:y1, np.newaxis][np.newaxis] - cy[:, np.newaxis, np.newaxis]
        dist_sq = dx * dx + dy * dy
        out[y0:y1] = np.argmin(dist_sq, axis=0).astype(np.int32)
    return CellIndexMap(indices=out, n_cells=n)


def _adjacent_cell_pairs(indices: np.ndarray) -> np.ndarray:
    """Unique unordered pairs of distinct cell indices on 4-adjacent pixels."""
    left, right = indices[:, :-1], indices[:, 1:]
    up, down = indices[:-1, :], indices[1:, :]
    ah = left != right
    av = up != down
    a = np.concatenate([left[ah], up[av]])
    b = np.concatenate([right[ah], down[av]])
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    if lo.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(np.column_stack([lo, hi]).astype(np.int64), axis=0)


def neighbor_max_distance(annotations: AnnotationSet, cells: CellIndexMap) -> NeighborDistances:
    """Farthest neighboring-center distance per cell on the rasterized diagram."""
    n = len(annotations)
    if cells.n_cells != n:
        raise ValidationError("cell map is inconsistent with the annotation set")
    pairs = _adjacent_cell_pairs(cells.indices)
    max_sq = np.full(n, np.inf)
    present = np.zeros(n, dtype=bool)
    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    if pairs.size:
        d = annotations.xy[pairs[:, 0]] - annotations.xy[pairs[:, 1]]
        sq = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        finite = np.zeros(n)
        np.maximum.at(finite, pairs[:, 0], sq)
        np.maximum.at(finite, pairs[:, 1], sq)
        for (i, j) in pairs:
            neighbor_sets[i].add(int(j))
            neighbor_sets[j].add(int(i))
            present[i] = present[j] = True
        max_sq[present] = finite[present]
    return NeighborDistances(
        max_distance_px=np.sqrt(max_sq),
        max_distance_sq_px=max_sq,
        neighbors=tuple(tuple(sorted(s)) for s in neighbor_sets),
    )


def _own_center_dist_sq(annotations: AnnotationSet, indices: np.ndarray) -> np.ndarray:
    w, h = annotations.image_dims
    cx = annotations.xy[indices, 0]
    cy = annotations.xy[indices, 1]
    dx = np.arange(w, dtype=np.float64)[np.newaxis, :] - cx
    dy = np.arange(h, dtype=np.float64)[:, np.newaxis] - cy
    return dx * dx + dy * dy


def _edge_mask(indices: np.ndarray) -> np.ndarray:
    edge = np.zeros(indices.shape, dtype=bool)
    dh = indices[:, :-1] != indices[:, 1:]
    edge[:, :-1] |= dh
    edge[:, 1:] |= dh
    dv = indices[:-1, :] != indices[1:, :]
    edge[:-1, :] |= dv
    edge[1:, :] |= dv
    return edge


def generate_label_mask(annotations: AnnotationSet, params: LabelParams | None = None) -> LabelMask:
    """Rasterize the four-class mask from point annotations.

    Code precedence is center > edge > background > object: a pixel is
    center when within center_radius_px of its own cell's annotation; else
    edge when any 4-neighbor lies in a different cell; else background when
    strictly farther from its center than the cell's farthest rasterized
    neighbor center; else object.
    """
    params = params or LabelParams()
    cells = assign_cells(annotations)
    dists = neighbor_max_distance(annotations, cells)
    indices = cells.indices
    own_sq = _own_center_dist_sq(annotations, indices)

    codes = np.full(indices.shape, OBJECT, dtype=np.uint8)
    codes[own_sq > dists.max_distance_sq_px[indices]] = BACKGROUND
    codes[_edge_mask(indices)] = EDGE
    radius = params.center_radius_px
    codes[own_sq <= radius * radius] = CENTER
    return LabelMask(codes=codes)


def generate_weight_map(mask: LabelMask, params: LabelParams | None = None) -> WeightMap:
    """Per-pixel weights looked up from the class of each pixel."""
    params = params or LabelParams()
    lut = np.asarray(params.class_weights, dtype=np.float32)
    return WeightMap(weights=lut[mask.codes])
