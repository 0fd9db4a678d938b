"""File I/O: annotation CSVs, the PMAP binary container, and PNG masks/images.

PMAP layout (little-endian, no padding):

    magic   4 bytes  b"PMAP"
    version u16      1
    dtype   u8       1 (float32)
    channels u8      1 (weight map) or 4 (posterior map)
    height  u32
    width   u32
    payload channels * height * width float32, planar, row-major per plane

Writing then reading any valid map reproduces it bit-exactly.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .model import (
    AnnotationError,
    AnnotationSet,
    GrayImage,
    LabelMask,
    PmapFormatError,
    PosteriorMap,
    ResolutionSpec,
    ValidationError,
    WeightMap,
)

ANNOTATION_HEADER = ("id", "x_px", "y_px")

_PMAP_MAGIC = b"PMAP"
_PMAP_VERSION = 1
_PMAP_DTYPE_F32 = 1
_PMAP_HEADER = struct.Struct("<4sHBBII")


def read_annotations(
    path: str | Path,
    resolution: ResolutionSpec,
    image_dims: tuple[int, int],
) -> AnnotationSet:
    """Parse a nuclei-center CSV (header ``id,x_px,y_px``) into an AnnotationSet.

    Row order is preserved. Errors cite the offending line number.
    """
    path = Path(path)
    if not path.is_file():
        raise AnnotationError(f"annotation file not found: {path}")
    w, h = image_dims
    ids: list[int] = []
    xs: list[float] = []
    ys: list[float] = []
    seen_ids: set[int] = set()
    seen_xy: set[tuple[float, float]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise AnnotationError(f"{path}: empty file, expected header id,x_px,y_px") from None
        if tuple(c.strip() for c in header) != ANNOTATION_HEADER:
            raise AnnotationError(f"{path}: line 1: expected header id,x_px,y_px, got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise AnnotationError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
            try:
                pid = int(row[0])
                x = float(row[1])
                y = float(row[2])
            except ValueError as exc:
                raise AnnotationError(f"{path}: line {lineno}: unparseable row {row!r}: {exc}") from None
            if pid in seen_ids:
                raise AnnotationError(f"{path}: line {lineno}: duplicate id {pid}")
            if not (0 <= x < w and 0 <= y < h):
                raise AnnotationError(
                    f"{path}: line {lineno}: id {pid} at ({x}, {y}) is outside the {w}x{h} image"
                )
            if (x, y) in seen_xy:
                raise AnnotationError(f"{path}: line {lineno}: duplicate coordinates ({x}, {y})")
            seen_ids.add(pid)
            seen_xy.add((x, y))
            ids.append(pid)
            xs.append(x)
            ys.append(y)
    return AnnotationSet(
        ids=np.asarray(ids, dtype=np.int64),
        xy=np.column_stack([xs, ys]) if ids else np.empty((0, 2)),
        resolution=resolution,
        image_dims=(int(w), int(h)),
    )


def write_annotations(annotations: AnnotationSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ANNOTATION_HEADER)
        for pid, x, y in annotations.points:
            writer.writerow([pid, repr(x), repr(y)])


def count_annotation_rows(path: str | Path) -> int:
    """Number of data rows in an annotation CSV, without full validation."""
    path = Path(path)
    if not path.is_file():
        raise AnnotationError(f"annotation file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        return sum(1 for row in reader if row and any(c.strip() for c in row))


def write_pmap(pmap: PosteriorMap | WeightMap, path: str | Path) -> None:
    """Serialize a posterior or weight map to the PMAP binary container."""
    if isinstance(pmap, PosteriorMap):
        planes = pmap.values
    elif isinstance(pmap, WeightMap):
        planes = pmap.weights[np.newaxis]
    else:
        raise ValidationError(f"write_pmap expects PosteriorMap or WeightMap, got {type(pmap).__name__}")
    if not np.isfinite(planes).all():
        raise ValidationError("refusing to write non-finite values")
    channels, height, width = planes.shape
    header = _PMAP_HEADER.pack(_PMAP_MAGIC, _PMAP_VERSION, _PMAP_DTYPE_F32, channels, height, width)
    payload = np.ascontiguousarray(planes, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_pmap(path: str | Path) -> PosteriorMap | WeightMap:
    """Read a PMAP file; returns the same type that was written."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise PmapFormatError(f"cannot read {path}: {exc}") from None
    if len(raw) < _PMAP_HEADER.size:
        raise PmapFormatError(f"{path}: file shorter than the 16-byte header")
    magic, version, dtype, channels, height, width = _PMAP_HEADER.unpack_from(raw)
    if magic != _PMAP_MAGIC:
        raise PmapFormatError(f"{path}: bad magic {magic!r}, expected {_PMAP_MAGIC!r}")
    if version != _PMAP_VERSION:
        raise PmapFormatError(f"{path}: unsupported version {version}, expected {_PMAP_VERSION}")
    if dtype != _PMAP_DTYPE_F32:
        raise PmapFormatError(f"{path}: unsupported dtype code {dtype}, expected {_PMAP_DTYPE_F32}")
    if channels not in (1, 4):
        raise PmapFormatError(f"{path}: channel count must be 1 or 4, got {channels}")
    expected = _PMAP_HEADER.size + channels * height * width * 4
    if len(raw) < expected:
        raise PmapFormatError(f"{path}: truncated payload, expected {expected} bytes, got {len(raw)}")
    if len(raw) > expected:
        raise PmapFormatError(f"{path}: {len(raw) - expected} trailing bytes after payload")
    planes = np.frombuffer(raw, dtype="<f4", offset=_PMAP_HEADER.size).reshape(channels, height, width)
    if channels == 4:
        return PosteriorMap(values=planes)
    return WeightMap(weights=planes[0])


def write_label_mask(mask: LabelMask, path: str | Path) -> None:
    """Store the mask as an 8-bit single-channel PNG with codes 0-3 verbatim."""
    Image.fromarray(np.asarray(mask.codes), mode="L").save(path, format="PNG")


def read_label_mask(path: str | Path) -> LabelMask:
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValidationError(f"{path}: expected an 8-bit single-channel PNG, got mode {img.mode!r}")
        codes = np.array(img, dtype=np.uint8)
    return LabelMask(codes=codes)


def read_gray_image(path: str | Path) -> GrayImage:
    """Load an 8- or 16-bit single-channel PNG, scaled to [0, 1]."""
    with Image.open(path) as img:
        arr = np.array(img)
    if arr.ndim != 2:
        raise ValidationError(f"{path}: expected a single-channel image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype in (np.uint16, np.int32):
        scale = 65535.0
    else:
        raise ValidationError(f"{path}: unsupported pixel type {arr.dtype}")
    return GrayImage(pixels=arr.astype(np.float64) / scale)


def write_gray_image(image: GrayImage, path: str | Path, bit_depth: int = 16) -> None:
    """Save intensities clipped to [0, 1] and scaled to the full integer range."""
    if bit_depth not in (8, 16):
        raise ValidationError(f"bit_depth must be 8 or 16, got {bit_depth}")
    clipped = np.clip(image.pixels, 0.0, 1.0)
    if bit_depth == 8:
        arr = np.round(clipped * 255.0).astype(np.uint8)
    else:
        arr = np.round(clipped * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(path, format="PNG")


def image_dims(path: str | Path) -> tuple[int, int]:
    """(width, height) of an image file, from its header only."""
    with Image.open(path) as img:
        return img.size
