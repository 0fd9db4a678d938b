import struct

import numpy as np
import pytest

from nucleitrain.formats import (
    FormatError,
    mask_paths_for,
    read_label_mask,
    read_manifest,
    read_pmap,
    read_weight_map,
    write_pmap,
)

# interop counterpart: the toolkit's own codec
import nucleikit


class TestPmapCodec:
    def test_round_trip(self, tmp_path):
        planes = np.random.default_rng(0).uniform(size=(4, 5, 7)).astype(np.float32)
        path = tmp_path / "m.pmap"
        write_pmap(planes, path)
        assert read_pmap(path).tobytes() == planes.tobytes()

    def test_reads_toolkit_written_files_bit_exactly(self, tmp_path):
        rng = np.random.default_rng(1)
        raw = rng.uniform(0.01, 1.0, size=(4, 6, 6)).astype(np.float32)
        values = (raw / raw.sum(0, keepdims=True, dtype=np.float64)).astype(np.float32)
        path = tmp_path / "m.pmap"
        nucleikit.write_pmap(nucleikit.PosteriorMap(values=values), path)
        assert read_pmap(path).tobytes() == values.tobytes()

    def test_toolkit_reads_our_files(self, tmp_path):
        rng = np.random.default_rng(2)
        raw = rng.uniform(0.01, 1.0, size=(4, 4, 4)).astype(np.float32)
        values = (raw / raw.sum(0, keepdims=True, dtype=np.float64)).astype(np.float32)
        path = tmp_path / "m.pmap"
        write_pmap(values, path)
        loaded = nucleikit.read_pmap(path)
        assert loaded.values.tobytes() == values.tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.pmap"
        write_pmap(np.zeros((1, 2, 2), dtype=np.float32), path)
        raw = bytearray(path.read_bytes())
        raw[0] = ord("X")
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="magic"):
            read_pmap(path)

    def test_all_zero_weight_map_rejected(self, tmp_path):
        # hand-crafted: invariant is enforced on read, before any training
        path = tmp_path / "w.pmap"
        header = struct.pack("<4sHBBII", b"PMAP", 1, 1, 1, 2, 2)
        path.write_bytes(header + np.zeros(4, dtype="<f4").tobytes())
        with pytest.raises(FormatError, match="all zero"):
            read_weight_map(path)


class TestMaskAndManifest:
    def test_reads_toolkit_masks(self, small_dataset):
        mask_path, weights_path = mask_paths_for(
            small_dataset["data"] / "img_000.csv", small_dataset["labels"]
        )
        codes = read_label_mask(mask_path)
        weights = read_weight_map(weights_path)
        assert codes.shape == weights.shape == (64, 64)
        assert set(np.unique(codes)) <= {0, 1, 2, 3}
        lut = np.array([1.0, 1.0, 5.0, 10.0], dtype=np.float32)
        assert np.array_equal(weights, lut[codes])

    def test_manifest_training_pairs(self, small_dataset):
        manifest = read_manifest(small_dataset["manifest"])
        pairs = manifest.training_pairs()
        assert len(pairs) == 4
        assert len(manifest.split_pairs("validation")) == 2
        assert len(manifest.split_pairs("test")) == 2
