"""Linear min/max intensity normalization for single-channel images."""

from __future__ import annotations

import math

import numpy as np

from .model import GrayImage, ValidationError


def _nearest_rank(sorted_values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile on the sorted multiset (pct 0 -> min, 100 -> max)."""
    n = sorted_values.size
    rank = max(1, math.ceil(pct / 100.0 * n))
    return float(sorted_values[rank - 1])


def normalize_linear(image: GrayImage, low_pct: float = 0.0, high_pct: float = 100.0) -> GrayImage:
    """Map intensities linearly onto [0, 1] between two percentile anchors.

    Defaults use the image minimum and maximum. Values outside the anchor
    range are clamped; a constant image maps to all zeros.
    """
    if not (0.0 <= low_pct < high_pct <= 100.0):
        raise ValidationError(f"require 0 <= low_pct < high_pct <= 100, got ({low_pct}, {high_pct})")
    pixels = image.pixels
    sorted_values = np.sort(pixels, axis=None)
    lo = _nearest_rank(sorted_values, low_pct)
    hi = _nearest_rank(sorted_values, high_pct)
    if hi == lo:
        return GrayImage(pixels=np.zeros_like(pixels))
    return GrayImage(pixels=np.clip((pixels - lo) / (hi - lo), 0.0, 1.0))
