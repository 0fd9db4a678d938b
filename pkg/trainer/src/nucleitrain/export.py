"""Posterior export: checkpoint + images -> 4-channel PMAP files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .formats import FormatError, read_gray_image, write_pmap
from .model import UNetResNet18


def load_model(checkpoint_path: str | Path) -> UNetResNet18:
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    model = UNetResNet18()
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def _softmax_posteriors(model: UNetResNet18, image: np.ndarray) -> np.ndarray:
    with torch.no_grad():
        logits = model(torch.from_numpy(image).reshape(1, 1, *image.shape))
        return torch.softmax(logits, dim=1).numpy()[0].astype(np.float32)


def predict_posteriors(model: UNetResNet18, image: np.ndarray, tile: int = 0) -> np.ndarray:
    """(4, h, w) softmax posteriors; larger images are processed in tiles.

    With tile > 0, image sides must be exact multiples of the tile size;
    anything else is a dimension mismatch.
    """
    h, w = image.shape
    if tile <= 0 or (h == tile and w == tile):
        if h % 32 or w % 32:
            raise FormatError(f"image sides must be multiples of 32, got {w}x{h}")
        return _softmax_posteriors(model, image)
    if h % tile or w % tile:
        raise FormatError(f"image {w}x{h} is not a multiple of the {tile}px training tile")
    out = np.empty((4, h, w), dtype=np.float32)
    for y0 in range(0, h, tile):
        for x0 in range(0, w, tile):
            out[:, y0:y0 + tile, x0:x0 + tile] = _softmax_posteriors(
                model, image[y0:y0 + tile, x0:x0 + tile]
            )
    return out


def export_posteriors(
    checkpoint_path: str | Path,
    image_paths: list[Path],
    out_dir: str | Path,
    tile: int = 0,
) -> list[Path]:
    """One <image-stem>.pmap per input image, readable by the toolkit."""
    model = load_model(checkpoint_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for image_path in image_paths:
        posteriors = predict_posteriors(model, read_gray_image(image_path), tile=tile)
        target = out_dir / f"{Path(image_path).stem}.pmap"
        write_pmap(posteriors, target)
        written.append(target)
    return written
