"""Core value types and their invariants.

All types are immutable after construction: array fields are marked
read-only so instances can be shared freely across parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Four-class label codes, also the channel order of PosteriorMap.
BACKGROUND = 0
OBJECT = 1
EDGE = 2
CENTER = 3
CLASS_NAMES = ("background", "object", "edge", "center")

POSTERIOR_SUM_TOL = 1e-3


class NucleikitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(NucleikitError):
    """A value violates one of its type invariants."""


class AnnotationError(NucleikitError):
    """Point-list CSV (annotations or detections) is malformed or
    inconsistent with its image."""


class ManifestError(NucleikitError):
    """Dataset manifest is missing, malformed, or references absent files."""


class PmapFormatError(NucleikitError):
    """PMAP file does not conform to the binary container format."""


class FixtureError(NucleikitError):
    """Synthetic fixture generation failed."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ResolutionSpec:
    """Physical pixel size, used to convert pixel distances to microns."""

    microns_per_pixel: float

    def __post_init__(self):
        mpp = self.microns_per_pixel
        if not isinstance(mpp, (int, float)) or not math.isfinite(mpp) or mpp <= 0:
            raise ValidationError(f"microns_per_pixel must be finite and > 0, got {mpp!r}")

    def to_um(self, distance_px: float) -> float:
        return distance_px * self.microns_per_pixel


@dataclass(frozen=True)
class AnnotationSet:
    """Point annotations of nuclei centers, in pixel coordinates.

    Order is significant (preserved from the source file). ids are unique,
    coordinates lie inside the image, and no two points coincide exactly.
    """

    ids: np.ndarray          # (n,) int64
    xy: np.ndarray           # (n, 2) float64, columns (x, y)
    resolution: ResolutionSpec
    image_dims: tuple[int, int]  # (width, height)

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int64)
        xy = np.ascontiguousarray(self.xy, dtype=np.float64).reshape(-1, 2)
        if ids.shape[0] != xy.shape[0]:
            raise ValidationError("ids and xy must have the same length")
        w, h = self.image_dims
        if not (isinstance(w, int) and isinstance(h, int) and w > 0 and h > 0):
            raise ValidationError(f"image_dims must be positive integers, got {self.image_dims!r}")
        if len(np.unique(ids)) != len(ids):
            raise ValidationError("annotation ids must be unique")
        if len(xy) and not np.isfinite(xy).all():
            raise ValidationError("annotation coordinates must be finite")
        if len(xy):
            x, y = xy[:, 0], xy[:, 1]
            bad = (x < 0) | (x >= w) | (y < 0) | (y >= h)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise ValidationError(
                    f"annotation id {int(ids[i])} at ({x[i]}, {y[i]}) is outside the {w}x{h} image"
                )
            if len(np.unique(xy, axis=0)) != len(xy):
                raise ValidationError("two annotations share identical (x, y) coordinates")
        object.__setattr__(self, "ids", _freeze(ids))
        object.__setattr__(self, "xy", _freeze(xy))

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def points(self) -> list[tuple[int, float, float]]:
        return [(int(i), float(x), float(y)) for i, (x, y) in zip(self.ids, self.xy)]


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel four-class mask; codes partition the image."""

    codes: np.ndarray  # (h, w) uint8 in {0,1,2,3}

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.uint8)
        if codes.ndim != 2 or codes.size == 0:
            raise ValidationError("mask must be a non-empty 2-D array")
        if codes.max() > CENTER:
            raise ValidationError("mask codes must be in {0, 1, 2, 3}")
        object.__setattr__(self, "codes", _freeze(codes))

    @property
    def dims(self) -> tuple[int, int]:
        h, w = self.codes.shape
        return (w, h)


@dataclass(frozen=True)
class WeightMap:
    """Per-pixel non-negative training weights; not all zero."""

    weights: np.ndarray  # (h, w) float32

    def __post_init__(self):
        weights = np.ascontiguousarray(self.weights, dtype=np.float32)
        if weights.ndim != 2 or weights.size == 0:
            raise ValidationError("weight map must be a non-empty 2-D array")
        if not np.isfinite(weights).all():
            raise ValidationError("weights must be finite")
        if weights.min() < 0:
            raise ValidationError("weights must be non-negative")
        if weights.max() <= 0:
            raise ValidationError("weight map is all zero")
        object.__setattr__(self, "weights", _freeze(weights))

    @property
    def dims(self) -> tuple[int, int]:
        h, w = self.weights.shape
        return (w, h)


@dataclass(frozen=True)
class PosteriorMap:
    """Four-channel class-posterior field, channels ordered like the label codes.

    Channel sums are validated to be within 1e-3 of 1.0 at every pixel.
    """

    values: np.ndarray  # (4, h, w) float32 in [0, 1]

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 3 or values.shape[0] != 4 or values.shape[1] == 0 or values.shape[2] == 0:
            raise ValidationError(f"posterior map must have shape (4, h, w), got {values.shape}")
        if not np.isfinite(values).all():
            raise ValidationError("posterior values must be finite")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValidationError("posterior values must lie in [0, 1]")
        sums = values.sum(axis=0, dtype=np.float64)
        err = np.abs(sums - 1.0).max()
        if err > POSTERIOR_SUM_TOL:
            raise ValidationError(f"per-pixel channel sums deviate from 1.0 by {err:.2e} (> {POSTERIOR_SUM_TOL})")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def dims(self) -> tuple[int, int]:
        _, h, w = self.values.shape
        return (w, h)

    def channel(self, code: int) -> np.ndarray:
        return self.values[code]

    @property
    def background(self) -> np.ndarray:
        return self.values[BACKGROUND]

    @property
    def object(self) -> np.ndarray:
        return self.values[OBJECT]

    @property
    def edge(self) -> np.ndarray:
        return self.values[EDGE]

    @property
    def center(self) -> np.ndarray:
        return self.values[CENTER]


@dataclass(frozen=True)
class GrayImage:
    """Single-channel intensity image with finite real values."""

    pixels: np.ndarray  # (h, w) float64

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or pixels.size == 0:
            raise ValidationError("image must be a non-empty 2-D array")
        if not np.isfinite(pixels).all():
            raise ValidationError("image intensities must be finite")
        object.__setattr__(self, "pixels", _freeze(pixels))

    @property
    def dims(self) -> tuple[int, int]:
        h, w = self.pixels.shape
        return (w, h)


@dataclass(frozen=True)
class Thresholds:
    """Detection hyper-parameters: cell-estimation and candidate-acceptance cuts."""

    kappa_e: float
    kappa_c: float

    def __post_init__(self):
        for name in ("kappa_e", "kappa_c"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not (0.0 < v < 1.0):
                raise ValidationError(f"{name} must lie strictly inside (0, 1), got {v!r}")
