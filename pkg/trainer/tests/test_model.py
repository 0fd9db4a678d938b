import numpy as np
import pytest
import torch

from nucleitrain.model import (
    UNetResNet18,
    weighted_cross_entropy,
    weighted_pixel_accuracy,
)


@pytest.fixture(scope="module")
def model():
    torch.manual_seed(0)
    return UNetResNet18()


class TestUNetResNet18:
    def test_output_shape_matches_input(self, model):
        y = model(torch.zeros(2, 1, 64, 64))
        assert tuple(y.shape) == (2, 4, 64, 64)

    def test_rejects_non_multiple_of_32(self, model):
        with pytest.raises(ValueError, match="multiples of 32"):
            model(torch.zeros(1, 1, 60, 64))

    def test_softmax_is_a_valid_posterior(self, model):
        with torch.no_grad():
            p = torch.softmax(model(torch.rand(1, 1, 64, 64)), dim=1)
        sums = p.sum(dim=1)
        assert float((sums - 1.0).abs().max()) < 1e-5


class TestLossAndMetric:
    def test_weighted_cross_entropy_hand_case(self):
        # logits force p=1 on class 0 at both pixels; only the second pixel
        # carries weight, and it is labeled class 1
        logits = torch.full((1, 4, 1, 2), -100.0)
        logits[0, 0] = 100.0
        codes = torch.tensor([[[0, 1]]])
        weights = torch.tensor([[[0.0, 2.0]]])
        loss = weighted_cross_entropy(logits, codes, weights)
        assert float(loss) == pytest.approx(200.0, rel=1e-6)

    def test_uniform_logits_give_log4(self):
        logits = torch.zeros(1, 4, 2, 2)
        codes = torch.zeros(1, 2, 2, dtype=torch.int64)
        weights = torch.ones(1, 2, 2)
        assert float(weighted_cross_entropy(logits, codes, weights)) == pytest.approx(np.log(4.0))

    def test_weighted_accuracy_counts_weight_not_pixels(self):
        logits = torch.full((1, 4, 1, 2), -100.0)
        logits[0, 0] = 100.0  # predicts class 0 everywhere
        codes = torch.tensor([[[0, 1]]])
        weights = torch.tensor([[[1.0, 3.0]]])
        assert weighted_pixel_accuracy(logits, codes, weights) == pytest.approx(0.25)
