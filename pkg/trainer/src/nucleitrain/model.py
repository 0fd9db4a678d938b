"""UNet with a ResNet18 encoder for four-class segmentation.

The encoder is torchvision's resnet18 (randomly initialized, first conv
swapped for single-channel input); the decoder upsamples through skip
connections back to full resolution. Input sides must be multiples of 32.
"""

from __future__ import annotations

import torch
from torch import nn
from torchvision.models import resnet18

N_CLASSES = 4


class _DecoderBlock(nn.Module):
    def __init__(self, in_channels: int, skip_channels: int, out_channels: int):
        super().__init__()
        self.upsample = nn.Upsample(scale_factor=2, mode="nearest")
        self.conv = nn.Sequential(
            nn.Conv2d(in_channels + skip_channels, out_channels, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x, skip=None):
        x = self.upsample(x)
        if skip is not None:
            x = torch.cat([x, skip], dim=1)
        return self.conv(x)


class UNetResNet18(nn.Module):
    def __init__(self, in_channels: int = 1, n_classes: int = N_CLASSES):
        super().__init__()
        backbone = resnet18(weights=None)
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, 64, kernel_size=7, stride=2, padding=3, bias=False),
            backbone.bn1,
            backbone.relu,
        )
        self.pool = backbone.maxpool
        self.layer1 = backbone.layer1  # /4,  64
        self.layer2 = backbone.layer2  # /8,  128
        self.layer3 = backbone.layer3  # /16, 256
        self.layer4 = backbone.layer4  # /32, 512
        self.up4 = _DecoderBlock(512, 256, 256)
        self.up3 = _DecoderBlock(256, 128, 128)
        self.up2 = _DecoderBlock(128, 64, 64)
        self.up1 = _DecoderBlock(64, 64, 64)
        self.up0 = _DecoderBlock(64, 0, 32)
        self.head = nn.Conv2d(32, n_classes, kernel_size=1)

    def forward(self, x):
        h, w = x.shape[-2:]
        if h % 32 or w % 32:
            raise ValueError(f"input sides must be multiples of 32, got {h}x{w}")
        s0 = self.stem(x)              # /2
        s1 = self.layer1(self.pool(s0))  # /4
        s2 = self.layer2(s1)           # /8
        s3 = self.layer3(s2)           # /16
        bottom = self.layer4(s3)       # /32
        y = self.up4(bottom, s3)
        y = self.up3(y, s2)
        y = self.up2(y, s1)
        y = self.up1(y, s0)
        y = self.up0(y)
        return self.head(y)


def weighted_cross_entropy(logits: torch.Tensor, codes: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Cross-entropy averaged with per-pixel weights: sum(w*ce) / sum(w)."""
    ce = nn.functional.cross_entropy(logits, codes, reduction="none")
    total = weights.sum()
    if total <= 0:
        raise ValueError("weight maps sum to zero")
    return (ce * weights).sum() / total


def weighted_pixel_accuracy(logits: torch.Tensor, codes: torch.Tensor, weights: torch.Tensor) -> float:
    """Fraction of weight carried by correctly classified pixels."""
    with torch.no_grad():
        predicted = logits.argmax(dim=1)
        correct = (predicted == codes).to(weights.dtype)
        return float((correct * weights).sum() / weights.sum())
