"""Dataset manifests: image/annotation inventories, splits, and variant ensembles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .io import count_annotation_rows
from .model import ManifestError, ResolutionSpec

SPLITS = ("train", "validation", "test")
MODES = ("inter", "intra", "cross")


@dataclass(frozen=True)
class ManifestEntry:
    image: Path
    annotations: Path
    resolution: ResolutionSpec
    split: str
    domain: str
    variant_group: str | None = None


@dataclass(frozen=True)
class TrainingPair:
    image: Path
    annotations: Path


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    ensembles: dict[str, tuple[Path, ...]] = field(default_factory=dict)

    def split_entries(self, split: str) -> list[ManifestEntry]:
        if split not in SPLITS:
            raise ManifestError(f"unknown split {split!r}, expected one of {SPLITS}")
        return [e for e in self.entries if e.split == split]


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest JSON document.

    Paths inside the document are resolved relative to the manifest file.
    All referenced files must exist; images must not repeat across splits.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: top-level value must be an object")

    base = path.parent
    raw_entries = doc.get("entries", [])
    if not isinstance(raw_entries, list):
        raise ManifestError(f"{path}: 'entries' must be a list")

    entries: list[ManifestEntry] = []
    image_split: dict[Path, str] = {}
    for i, raw in enumerate(raw_entries):
        where = f"{path}: entries[{i}]"
        if not isinstance(raw, dict):
            raise ManifestError(f"{where}: must be an object")
        try:
            image = (base / raw["image"]).resolve()
            annotations = (base / raw["annotations"]).resolve()
            mpp = raw["microns_per_pixel"]
            split = raw["split"]
            domain = raw["domain"]
        except KeyError as exc:
            raise ManifestError(f"{where}: missing key {exc.args[0]!r}") from None
        if split not in SPLITS:
            raise ManifestError(f"{where}: split must be one of {SPLITS}, got {split!r}")
        if not image.is_file():
            raise ManifestError(f"{where}: image file does not exist: {image}")
        if not annotations.is_file():
            raise ManifestError(f"{where}: annotation file does not exist: {annotations}")
        previous = image_split.get(image)
        if previous is not None:
            raise ManifestError(f"{where}: image {image} already listed in split {previous!r}")
        image_split[image] = split
        entries.append(
            ManifestEntry(
                image=image,
                annotations=annotations,
                resolution=ResolutionSpec(float(mpp)),
                split=split,
                domain=str(domain),
                variant_group=raw.get("variant_group"),
            )
        )

    raw_ensembles = doc.get("ensembles", {})
    if not isinstance(raw_ensembles, dict):
        raise ManifestError(f"{path}: 'ensembles' must be an object")
    group_entries = {}
    for entry in entries:
        if entry.variant_group is not None:
            group_entries.setdefault(entry.variant_group, []).append(entry)
    ensembles: dict[str, tuple[Path, ...]] = {}
    for group, paths in raw_ensembles.items():
        sources = group_entries.get(group, [])
        if len(sources) != 1:
            raise ManifestError(
                f"{path}: ensemble group {group!r} must reference exactly one entry, found {len(sources)}"
            )
        if not isinstance(paths, list):
            raise ManifestError(f"{path}: ensembles[{group!r}] must be a list of paths")
        variants = []
        for p in paths:
            vp = (base / p).resolve()
            if not vp.is_file():
                raise ManifestError(f"{path}: ensembles[{group!r}]: variant image does not exist: {vp}")
            variants.append(vp)
        ensembles[group] = tuple(variants)

    return DatasetManifest(entries=tuple(entries), ensembles=ensembles)


def _nucleus_count(entry: ManifestEntry) -> int:
    return count_annotation_rows(entry.annotations)


def synthetic_pairs(manifest: DatasetManifest) -> list[TrainingPair]:
    """Ensemble-expanded synthetic training pairs, in manifest and ensemble order.

    Variants share the annotation file of their source entry; the source
    image itself is not part of the expansion.
    """
    pairs: list[TrainingPair] = []
    for entry in manifest.split_entries("train"):
        if entry.variant_group is None:
            continue
        for variant in manifest.ensembles.get(entry.variant_group, ()):
            pairs.append(TrainingPair(image=variant, annotations=entry.annotations))
    return pairs


def compose_training_set(
    manifest: DatasetManifest,
    mode: str,
    n_target_nuclei: int | None = None,
) -> list[TrainingPair]:
    """Assemble a training set for one of the three supervision modes.

    inter: synthetic variant pairs only. intra: real train entries, taken
    whole in manifest order until their cumulative nucleus count first
    reaches n_target_nuclei (all of them when the count is None). cross:
    synthetic pairs followed by the intra subsample.
    """
    if mode not in MODES:
        raise ManifestError(f"mode must be one of {MODES}, got {mode!r}")

    synthetic = synthetic_pairs(manifest) if mode in ("inter", "cross") else []
    if mode in ("inter", "cross") and not synthetic:
        raise ManifestError(f"mode {mode!r} requires ensemble variants but the manifest has none")
    if mode == "inter":
        return synthetic

    real_entries = [e for e in manifest.split_entries("train") if e.variant_group is None]
    if n_target_nuclei is None:
        real = [TrainingPair(image=e.image, annotations=e.annotations) for e in real_entries]
        if mode == "intra" and not real:
            raise ManifestError("mode 'intra' requires real train entries but the manifest has none")
    elif n_target_nuclei < 0:
        raise ManifestError(f"n_target_nuclei must be >= 0, got {n_target_nuclei}")
    else:
        counts = [_nucleus_count(e) for e in real_entries]
        if n_target_nuclei > sum(counts):
            raise ManifestError(
                f"n_target_nuclei={n_target_nuclei} exceeds the {sum(counts)} "
                "annotated nuclei available in real train entries"
            )
        real = []
        cumulative = 0
        for entry, count in zip(real_entries, counts):
            if cumulative >= n_target_nuclei:
                break
            real.append(TrainingPair(image=entry.image, annotations=entry.annotations))
            cumulative += count
    return synthetic + real
