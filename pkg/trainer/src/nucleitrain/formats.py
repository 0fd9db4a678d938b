"""Readers/writers for the toolkit interchange formats.

This package talks to the detection toolkit exclusively through its file
formats, so the codecs are implemented here against the documented byte
layouts rather than imported.

PMAP (little-endian, no padding): magic b"PMAP", version u16=1, dtype u8=1
(float32), channels u8 in {1,4}, height u32, width u32, then
channels*height*width float32 values, planar, row-major per plane.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

_PMAP_HEADER = struct.Struct("<4sHBBII")
_PMAP_MAGIC = b"PMAP"


class FormatError(Exception):
    """File does not conform to the interchange contract."""


def read_pmap(path: str | Path) -> np.ndarray:
    """A (channels, height, width) float32 array from a PMAP file."""
    raw = Path(path).read_bytes()
    if len(raw) < _PMAP_HEADER.size:
        raise FormatError(f"{path}: shorter than the 16-byte header")
    magic, version, dtype, channels, height, width = _PMAP_HEADER.unpack_from(raw)
    if magic != _PMAP_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1 or dtype != 1:
        raise FormatError(f"{path}: unsupported version/dtype {version}/{dtype}")
    if channels not in (1, 4):
        raise FormatError(f"{path}: channels must be 1 or 4, got {channels}")
    expected = _PMAP_HEADER.size + channels * height * width * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: payload size {len(raw)} != expected {expected}")
    return np.frombuffer(raw, dtype="<f4", offset=_PMAP_HEADER.size).reshape(channels, height, width).copy()


def write_pmap(planes: np.ndarray, path: str | Path) -> None:
    planes = np.ascontiguousarray(planes, dtype="<f4")
    if planes.ndim != 3 or planes.shape[0] not in (1, 4):
        raise FormatError(f"expected (1|4, h, w) planes, got shape {planes.shape}")
    if not np.isfinite(planes).all():
        raise FormatError("refusing to write non-finite values")
    channels, height, width = planes.shape
    with open(path, "wb") as fh:
        fh.write(_PMAP_HEADER.pack(_PMAP_MAGIC, 1, 1, channels, height, width))
        fh.write(planes.tobytes())


def read_weight_map(path: str | Path) -> np.ndarray:
    """(h, w) float32 training weights; all-zero maps are rejected."""
    planes = read_pmap(path)
    if planes.shape[0] != 1:
        raise FormatError(f"{path}: weight map must have 1 channel, got {planes.shape[0]}")
    weights = planes[0]
    if weights.min() < 0:
        raise FormatError(f"{path}: weights must be non-negative")
    if weights.max() <= 0:
        raise FormatError(f"{path}: weight map is all zero")
    return weights


def read_label_mask(path: str | Path) -> np.ndarray:
    """(h, w) uint8 class codes 0..3 from an 8-bit PNG."""
    with Image.open(path) as img:
        if img.mode != "L":
            raise FormatError(f"{path}: expected 8-bit single-channel PNG, got {img.mode!r}")
        codes = np.array(img, dtype=np.uint8)
    if codes.max() > 3:
        raise FormatError(f"{path}: mask codes must be 0..3")
    return codes


def read_gray_image(path: str | Path) -> np.ndarray:
    """(h, w) float32 intensities in [0, 1] from an 8/16-bit PNG."""
    with Image.open(path) as img:
        arr = np.array(img)
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected single-channel image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / 255.0
    if arr.dtype in (np.uint16, np.int32):
        return arr.astype(np.float32) / 65535.0
    raise FormatError(f"{path}: unsupported pixel type {arr.dtype}")


@dataclass(frozen=True)
class ManifestEntry:
    image: Path
    annotations: Path
    split: str
    variant_group: str | None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    ensembles: dict[str, tuple[Path, ...]]

    def training_pairs(self) -> list[tuple[Path, Path]]:
        """(image, annotations) pairs: ensemble variants plus real train entries."""
        pairs = []
        for entry in self.entries:
            if entry.split != "train":
                continue
            if entry.variant_group is not None:
                for variant in self.ensembles.get(entry.variant_group, ()):
                    pairs.append((variant, entry.annotations))
            else:
                pairs.append((entry.image, entry.annotations))
        return pairs

    def split_pairs(self, split: str) -> list[tuple[Path, Path]]:
        return [(e.image, e.annotations) for e in self.entries if e.split == split]


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from None
    base = path.parent
    entries = []
    for raw in doc.get("entries", []):
        entries.append(
            ManifestEntry(
                image=(base / raw["image"]).resolve(),
                annotations=(base / raw["annotations"]).resolve(),
                split=raw["split"],
                variant_group=raw.get("variant_group"),
            )
        )
    ensembles = {
        group: tuple((base / p).resolve() for p in paths)
        for group, paths in doc.get("ensembles", {}).items()
    }
    return Manifest(entries=tuple(entries), ensembles=ensembles)


def mask_paths_for(annotations: Path, masks_dir: Path) -> tuple[Path, Path]:
    """Mask/weight locations as written by the labeling tool (keyed by stem)."""
    stem = annotations.stem
    return masks_dir / f"{stem}.mask.png", masks_dir / f"{stem}.weights.pmap"
