"""Deterministic synthetic fixtures: nuclei layouts, pseudo-posteriors, variants.

Everything derives from integer seeds through numpy's seeded generators,
so outputs are bitwise reproducible. The rendered posteriors are shaped so
that thresholding background+edge separates one blob per nucleus and the
center channel peaks at the pixel nearest each annotation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .io import write_annotations, write_gray_image, write_pmap
from .model import (
    AnnotationSet,
    FixtureError,
    GrayImage,
    PosteriorMap,
    ResolutionSpec,
)
from .voronoi import _edge_mask, assign_cells

_MAX_LAYOUT_ATTEMPTS = 10_000
_EDGE_LEVEL = 0.9
_OBJECT_FLOOR = 0.05


@dataclass(frozen=True)
class FixtureSpec:
    seed: int
    width: int = 64
    height: int = 64
    n_nuclei: int = 10
    min_separation_px: float = 10.0
    bump_sigma_px: float = 2.0
    noise_amplitude: float = 0.0
    microns_per_pixel: float = 0.5

    def __post_init__(self):
        if self.n_nuclei < 0:
            raise FixtureError(f"n_nuclei must be >= 0, got {self.n_nuclei}")
        if self.width <= 0 or self.height <= 0:
            raise FixtureError(f"dims must be positive, got {self.width}x{self.height}")
        if not self.min_separation_px > 2 * self.bump_sigma_px:
            raise FixtureError(
                f"min_separation_px={self.min_separation_px} must exceed "
                f"2*bump_sigma_px={2 * self.bump_sigma_px} for resolvable bumps"
            )
        if not (0.0 <= self.noise_amplitude < 0.2):
            raise FixtureError(f"noise_amplitude must lie in [0, 0.2), got {self.noise_amplitude}")

    @property
    def resolution(self) -> ResolutionSpec:
        return ResolutionSpec(self.microns_per_pixel)


def sample_layout(spec: FixtureSpec) -> AnnotationSet:
    """Rejection-sample nuclei centers with pairwise separation, bounded attempts."""
    rng = np.random.default_rng(spec.seed)
    margin = spec.bump_sigma_px
    lo_x, hi_x = margin, spec.width - 1 - margin
    lo_y, hi_y = margin, spec.height - 1 - margin
    if spec.n_nuclei > 0 and (lo_x >= hi_x or lo_y >= hi_y):
        raise FixtureError(f"image {spec.width}x{spec.height} too small for margin {margin}")
    points: list[tuple[float, float]] = []
    min_sq = spec.min_separation_px * spec.min_separation_px
    attempts = 0
    while len(points) < spec.n_nuclei:
        attempts += 1
        if attempts > _MAX_LAYOUT_ATTEMPTS:
            raise FixtureError(
                f"layout infeasible: placed {len(points)}/{spec.n_nuclei} nuclei "
                f"after {_MAX_LAYOUT_ATTEMPTS} attempts"
            )
        x = rng.uniform(lo_x, hi_x)
        y = rng.uniform(lo_y, hi_y)
        if all((x - px) ** 2 + (y - py) ** 2 >= min_sq for px, py in points):
            points.append((x, y))
    xy = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return AnnotationSet(
        ids=np.arange(1, spec.n_nuclei + 1, dtype=np.int64),
        xy=xy,
        resolution=spec.resolution,
        image_dims=(spec.width, spec.height),
    )


def _bump_field(gt: AnnotationSet, sigma: float, dims: tuple[int, int]) -> np.ndarray:
    w, h = dims
    field = np.zeros((h, w), dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)[np.newaxis, :]
    ys = np.arange(h, dtype=np.float64)[:, np.newaxis]
    for x, y in gt.xy:
        field += np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2.0 * sigma * sigma))
    return field


def _nearest_center_dist_sq(gt: AnnotationSet, dims: tuple[int, int]) -> np.ndarray:
    w, h = dims
    if len(gt) == 0:
        return np.full((h, w), np.inf)
    xs = np.arange(w, dtype=np.float64)[np.newaxis, :]
    ys = np.arange(h, dtype=np.float64)[:, np.newaxis]
    best = np.full((h, w), np.inf)
    for x, y in gt.xy:
        best = np.minimum(best, (xs - x) ** 2 + (ys - y) ** 2)
    return best


def render_posteriors(gt: AnnotationSet, spec: FixtureSpec) -> PosteriorMap:
    """Posterior-shaped field for a known layout.

    Center: Gaussian bumps. Edge: a wall on the rasterized Voronoi
    boundaries. Background: rises with distance from the nearest center.
    Channels are renormalized to sum to one per pixel after optional
    seeded uniform noise.
    """
    dims = (spec.width, spec.height)
    sigma = spec.bump_sigma_px
    center = np.clip(_bump_field(gt, sigma, dims), 0.0, 1.0)
    dist_sq = _nearest_center_dist_sq(gt, dims)
    bg_sigma = 2.0 * sigma
    background = 1.0 - np.exp(-dist_sq / (2.0 * bg_sigma * bg_sigma))
    edge = np.zeros((spec.height, spec.width), dtype=np.float64)
    if len(gt) >= 2:
        edge[_edge_mask(assign_cells(gt).indices)] = _EDGE_LEVEL
    obj = np.full((spec.height, spec.width), _OBJECT_FLOOR, dtype=np.float64)

    stack = np.stack([background, obj, edge, center])
    if spec.noise_amplitude > 0:
        noise_rng = np.random.default_rng([spec.seed, 7])
        stack = stack + spec.noise_amplitude * noise_rng.uniform(size=stack.shape)
    stack /= stack.sum(axis=0, keepdims=True)
    return PosteriorMap(values=stack.astype(np.float32))


def render_image(gt: AnnotationSet, spec: FixtureSpec) -> GrayImage:
    """Grayscale stand-in image: the clipped bump field."""
    dims = (spec.width, spec.height)
    return GrayImage(pixels=np.clip(_bump_field(gt, spec.bump_sigma_px, dims), 0.0, 1.0))


def make_variants(
    image: GrayImage, n: int, seed: int, jitter: float = 0.05
) -> list[GrayImage]:
    """n photometric variants (gain/offset jitter, geometry unchanged)."""
    if n < 1:
        raise FixtureError(f"variant count must be >= 1, got {n}")
    if not (0.0 <= jitter <= 0.05):
        raise FixtureError(f"jitter must lie in [0, 0.05], got {jitter}")
    variants = []
    for k in range(n):
        rng = np.random.default_rng([seed, k])
        gain = 1.0 + jitter * (2.0 * rng.uniform() - 1.0)
        offset = jitter * (2.0 * rng.uniform() - 1.0)
        variants.append(GrayImage(pixels=np.clip(gain * image.pixels + offset, 0.0, 1.0)))
    return variants


def _image_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def generate_dataset(
    out_dir: str | Path,
    seed: int,
    n_train: int,
    n_validation: int,
    n_test: int,
    spec: FixtureSpec | None = None,
    n_source: int = 0,
    variants_per_source: int = 0,
    variant_select: list[int] | None = None,
    domain: str = "fixture",
) -> Path:
    """Write a ready-to-use dataset (images, annotations, PMAPs, manifest).

    The first n_source train entries act as source-domain images carrying
    variant ensembles; variant_select optionally restricts which variant
    indices are listed in the manifest, mirroring manual model selection.
    Returns the manifest path.
    """
    base = spec or FixtureSpec(seed=seed)
    if n_source > n_train:
        raise FixtureError(f"n_source={n_source} exceeds n_train={n_train}")
    if n_source > 0 and variants_per_source < 1:
        raise FixtureError("source entries require variants_per_source >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    splits = ["train"] * n_train + ["validation"] * n_validation + ["test"] * n_test
    entries = []
    ensembles: dict[str, list[str]] = {}
    for i, split in enumerate(splits):
        stem = f"img_{i:03d}"
        image_spec = replace(base, seed=_image_seed(seed, i))
        gt = sample_layout(image_spec)
        image = render_image(gt, image_spec)
        write_gray_image(image, out_dir / f"{stem}.png")
        write_annotations(gt, out_dir / f"{stem}.csv")
        write_pmap(render_posteriors(gt, image_spec), out_dir / f"{stem}.pmap")
        entry = {
            "image": f"{stem}.png",
            "annotations": f"{stem}.csv",
            "microns_per_pixel": base.microns_per_pixel,
            "split": split,
            "domain": domain,
        }
        if split == "train" and i < n_source:
            group = f"group_{i:03d}"
            entry["variant_group"] = group
            chosen = []
            variant_images = make_variants(image, variants_per_source, seed=_image_seed(seed, i) + 1)
            for k, variant in enumerate(variant_images):
                if variant_select is not None and k not in variant_select:
                    continue
                vname = f"{stem}_v{k:02d}.png"
                write_gray_image(variant, out_dir / vname)
                chosen.append(vname)
            ensembles[group] = chosen
        entries.append(entry)

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps({"entries": entries, "ensembles": ensembles}, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest_path
