import json

import numpy as np
import pytest

from nucleikit.detect import detect_centers
from nucleikit.fixtures import (
    FixtureSpec,
    generate_dataset,
    make_variants,
    render_image,
    render_posteriors,
    sample_layout,
)
from nucleikit.manifest import compose_training_set, load_manifest
from nucleikit.model import FixtureError, GrayImage, Thresholds


class TestFixtureSpec:
    def test_bump_resolvability_invariant(self):
        with pytest.raises(FixtureError, match="resolvable"):
            FixtureSpec(seed=1, min_separation_px=3.0, bump_sigma_px=2.0)

    def test_noise_bound(self):
        with pytest.raises(FixtureError, match="noise"):
            FixtureSpec(seed=1, noise_amplitude=0.2)

    def test_negative_count(self):
        with pytest.raises(FixtureError):
            FixtureSpec(seed=1, n_nuclei=-1)


class TestSampleLayout:
    def test_zero_nuclei(self):
        gt = sample_layout(FixtureSpec(seed=1, n_nuclei=0))
        assert len(gt) == 0

    def test_same_seed_is_identical(self):
        spec = FixtureSpec(seed=11, n_nuclei=8)
        a = sample_layout(spec)
        b = sample_layout(spec)
        assert a.xy.tobytes() == b.xy.tobytes()

    def test_pairwise_separation_exhaustively(self):
        spec = FixtureSpec(seed=7, width=64, height=64, n_nuclei=20, min_separation_px=10.0)
        gt = sample_layout(spec)
        assert len(gt) == 20
        for i in range(20):
            for j in range(i + 1, 20):
                dx = gt.xy[i, 0] - gt.xy[j, 0]
                dy = gt.xy[i, 1] - gt.xy[j, 1]
                assert dx * dx + dy * dy >= 100.0

    def test_infeasible_density_raises(self):
        spec = FixtureSpec(seed=1, width=32, height=32, n_nuclei=40, min_separation_px=10.0)
        with pytest.raises(FixtureError, match="infeasible"):
            sample_layout(spec)


class TestRenderPosteriors:
    def test_empty_layout_is_background(self):
        spec = FixtureSpec(seed=2, n_nuclei=0)
        pmap = render_posteriors(sample_layout(spec), spec)
        assert pmap.background.min() > 0.9

    def test_posterior_sum_invariant(self):
        spec = FixtureSpec(seed=2, n_nuclei=10, noise_amplitude=0.15)
        pmap = render_posteriors(sample_layout(spec), spec)
        sums = pmap.values.sum(axis=0, dtype=np.float64)
        assert np.abs(sums - 1.0).max() <= 1e-3

    def test_single_nucleus_peak_at_annotation_pixel(self):
        spec = FixtureSpec(seed=0, width=17, height=17, n_nuclei=0)
        gt = sample_layout(spec)
        gt = type(gt)(
            ids=np.array([1], dtype=np.int64),
            xy=np.array([[8.0, 8.0]]),
            resolution=gt.resolution,
            image_dims=gt.image_dims,
        )
        pmap = render_posteriors(gt, spec)
        peak = np.unravel_index(np.argmax(pmap.center), pmap.center.shape)
        assert peak == (8, 8)

    def test_detection_recovers_every_nucleus(self):
        spec = FixtureSpec(seed=3, width=64, height=64, n_nuclei=10, min_separation_px=10.0)
        gt = sample_layout(spec)
        pmap = render_posteriors(gt, spec)
        detections = detect_centers(pmap, Thresholds(kappa_e=0.5, kappa_c=0.3), spec.resolution)
        assert len(detections) == 10
        for x, y in gt.xy:
            nearest = np.sqrt((detections.xs - x) ** 2 + (detections.ys - y) ** 2).min()
            assert nearest <= 2.0

    def test_bitwise_reproducible(self):
        spec = FixtureSpec(seed=9, n_nuclei=6, noise_amplitude=0.1)
        a = render_posteriors(sample_layout(spec), spec)
        b = render_posteriors(sample_layout(spec), spec)
        assert a.values.tobytes() == b.values.tobytes()


class TestMakeVariants:
    def test_zero_jitter_is_identity(self):
        image = GrayImage(pixels=np.linspace(0, 1, 12).reshape(3, 4))
        (variant,) = make_variants(image, 1, seed=4, jitter=0.0)
        assert variant.pixels.tobytes() == image.pixels.tobytes()

    def test_same_seed_identical_lists(self):
        image = GrayImage(pixels=np.linspace(0, 1, 12).reshape(3, 4))
        a = make_variants(image, 5, seed=4)
        b = make_variants(image, 5, seed=4)
        assert all(x.pixels.tobytes() == y.pixels.tobytes() for x, y in zip(a, b))

    def test_variants_differ_but_stay_close(self):
        image = GrayImage(pixels=np.linspace(0, 1, 100).reshape(10, 10))
        variants = make_variants(image, 3, seed=4)
        for v in variants:
            assert np.abs(v.pixels - image.pixels).max() <= 0.15
        assert variants[0].pixels.tobytes() != variants[1].pixels.tobytes()


class TestGenerateDataset:
    def test_manifest_is_ready_to_use(self, tmp_path):
        spec = FixtureSpec(seed=5, n_nuclei=6)
        path = generate_dataset(
            tmp_path, seed=5, n_train=2, n_validation=1, n_test=1, spec=spec,
            n_source=1, variants_per_source=3,
        )
        manifest = load_manifest(path)
        assert len(manifest.entries) == 4
        assert len(manifest.split_entries("train")) == 2
        assert len(manifest.ensembles["group_000"]) == 3
        pairs = compose_training_set(manifest, "cross")
        assert len(pairs) == 4  # 3 variants + 1 real train entry

    def test_variant_selection_mirrors_manual_model_choice(self, tmp_path):
        # generate 25 variants, keep 22 by index list
        spec = FixtureSpec(seed=5, n_nuclei=4)
        keep = [i for i in range(25) if i not in (3, 11, 19)]
        path = generate_dataset(
            tmp_path, seed=5, n_train=1, n_validation=0, n_test=0, spec=spec,
            n_source=1, variants_per_source=25, variant_select=keep,
        )
        manifest = load_manifest(path)
        assert len(manifest.ensembles["group_000"]) == 22

    def test_regenerating_is_byte_identical(self, tmp_path):
        spec = FixtureSpec(seed=8, n_nuclei=5, noise_amplitude=0.05)
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        generate_dataset(a_dir, seed=8, n_train=1, n_validation=1, n_test=0, spec=spec)
        generate_dataset(b_dir, seed=8, n_train=1, n_validation=1, n_test=0, spec=spec)
        for name in ("img_000.png", "img_000.csv", "img_000.pmap", "manifest.json"):
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()

    def test_render_image_matches_layout(self):
        spec = FixtureSpec(seed=6, n_nuclei=5)
        gt = sample_layout(spec)
        image = render_image(gt, spec)
        for x, y in gt.xy:
            assert image.pixels[int(round(y)), int(round(x))] > 0.5
