import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nucleikit.model import GrayImage, ValidationError
from nucleikit.normalize import normalize_linear


def gray(values):
    return GrayImage(pixels=np.asarray(values, dtype=np.float64))


class TestNormalizeLinear:
    def test_two_point_case(self):
        out = normalize_linear(gray([[1.0, 3.0]]))
        assert out.pixels.tolist() == [[0.0, 1.0]]

    def test_idempotent_on_unit_span(self):
        img = gray([[0.0, 0.25, 0.5, 1.0]])
        out = normalize_linear(img)
        assert np.array_equal(out.pixels, img.pixels)

    def test_direct_formula(self):
        out = normalize_linear(gray([[0.0, 10.0, 100.0, 1000.0]]))
        assert out.pixels.tolist() == [[0.0, 0.01, 0.1, 1.0]]

    def test_constant_image_maps_to_zeros(self):
        out = normalize_linear(gray([[7.0, 7.0], [7.0, 7.0]]))
        assert not out.pixels.any()

    def test_percentile_anchors_clamp_tails(self):
        # 10 values; nearest-rank at 10% -> rank 1, at 90% -> rank 9
        values = np.arange(1.0, 11.0).reshape(1, 10)
        out = normalize_linear(gray(values), low_pct=10.0, high_pct=90.0)
        assert out.pixels[0, 0] == 0.0
        assert out.pixels[0, 8] == 1.0
        assert out.pixels[0, 9] == 1.0  # clamped above the 90% anchor

    def test_invalid_percentiles(self):
        img = gray([[1.0, 2.0]])
        for low, high in ((-1.0, 100.0), (0.0, 101.0), (50.0, 50.0), (60.0, 40.0)):
            with pytest.raises(ValidationError):
                normalize_linear(img, low_pct=low, high_pct=high)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=40))
    def test_range_and_extremes(self, values):
        out = normalize_linear(gray([values])).pixels
        assert out.min() >= 0.0 and out.max() <= 1.0
        if len(set(values)) > 1:
            assert out.min() == 0.0 and out.max() == 1.0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=40))
    def test_monotone(self, values):
        img = gray([values])
        out = normalize_linear(img).pixels[0]
        order = np.argsort(np.asarray(values, dtype=float), kind="stable")
        assert (np.diff(out[order]) >= 0).all()

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.integers(-1000, 1000), min_size=2, max_size=30),
        st.integers(-3, 3),
        st.integers(-50, 50),
    )
    def test_affine_invariance_exact(self, values, gain_exp, offset):
        # power-of-two gain and integer offset keep the float arithmetic exact
        img = gray([values])
        scaled = gray([[v * 2.0**gain_exp + offset for v in values]])
        a = normalize_linear(img).pixels
        b = normalize_linear(scaled).pixels
        assert np.array_equal(a, b)
