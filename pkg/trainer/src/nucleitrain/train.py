"""Training loop: per-epoch checkpoints, a JSON log, and best-model selection."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from .formats import (
    FormatError,
    mask_paths_for,
    read_gray_image,
    read_label_mask,
    read_manifest,
    read_weight_map,
)
from .model import UNetResNet18, weighted_cross_entropy, weighted_pixel_accuracy

LOG_NAME = "training_log.json"


@dataclass
class TrainConfig:
    manifest: str
    masks_dir: str
    checkpoint_dir: str
    epochs: int = 20
    batch_size: int = 2
    learning_rate: float = 3e-3
    seed: int = 0
    selection_metric: str = "weighted_pixel_accuracy"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.selection_metric != "weighted_pixel_accuracy":
            raise ValueError(f"unsupported selection metric {self.selection_metric!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "TrainConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


class SegmentationSamples(Dataset):
    """(image, codes, weights) triples loaded from the toolkit's files."""

    def __init__(self, pairs: list[tuple[Path, Path]], masks_dir: Path):
        if not pairs:
            raise FormatError("split has no image/annotation pairs")
        self.items = []
        for image_path, annotation_path in pairs:
            mask_path, weights_path = mask_paths_for(annotation_path, masks_dir)
            for p in (mask_path, weights_path):
                if not p.is_file():
                    raise FormatError(f"missing mask/weight file {p}; run the labeling tool first")
            self.items.append((image_path, mask_path, weights_path))

    def __len__(self):
        return len(self.items)

    def __getitem__(self, index):
        image_path, mask_path, weights_path = self.items[index]
        image = torch.from_numpy(read_gray_image(image_path)).unsqueeze(0)
        codes = torch.from_numpy(read_label_mask(mask_path).astype(np.int64))
        weights = torch.from_numpy(read_weight_map(weights_path))
        return image, codes, weights


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def _epoch_pass(model, loader, optimizer=None):
    training = optimizer is not None
    model.train(training)
    loss_total = 0.0
    weight_total = 0.0
    correct_total = 0.0
    with torch.set_grad_enabled(training):
        for image, codes, weights in loader:
            logits = model(image)
            loss = weighted_cross_entropy(logits, codes, weights)
            if training:
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            batch_weight = float(weights.sum())
            loss_total += float(loss.detach()) * batch_weight
            weight_total += batch_weight
            correct_total += weighted_pixel_accuracy(logits, codes, weights) * batch_weight
    return loss_total / weight_total, correct_total / weight_total


def train(config: TrainConfig) -> tuple[list[Path], list[dict]]:
    """Fit the network; returns (checkpoint paths, per-epoch log rows).

    One checkpoint per epoch is written to the checkpoint directory along
    with a training log recording the weighted loss and the validation
    selection metric.
    """
    _seed_everything(config.seed)
    manifest = read_manifest(config.manifest)
    masks_dir = Path(config.masks_dir)
    train_data = SegmentationSamples(manifest.training_pairs(), masks_dir)
    val_data = SegmentationSamples(manifest.split_pairs("validation"), masks_dir)

    generator = torch.Generator().manual_seed(config.seed)
    train_loader = DataLoader(
        train_data, batch_size=config.batch_size, shuffle=True, generator=generator
    )
    val_loader = DataLoader(val_data, batch_size=config.batch_size, shuffle=False)

    model = UNetResNet18()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    checkpoint_dir = Path(config.checkpoint_dir)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    checkpoints: list[Path] = []
    log: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        train_loss, _ = _epoch_pass(model, train_loader, optimizer)
        _, val_accuracy = _epoch_pass(model, val_loader)
        path = checkpoint_dir / f"epoch_{epoch:03d}.pt"
        torch.save(
            {
                "epoch": epoch,
                "state_dict": model.state_dict(),
                "config": asdict(config),
                "val_weighted_accuracy": val_accuracy,
            },
            path,
        )
        checkpoints.append(path)
        log.append(
            {
                "epoch": epoch,
                "checkpoint": path.name,
                "train_weighted_loss": train_loss,
                "val_weighted_accuracy": val_accuracy,
            }
        )
    (checkpoint_dir / LOG_NAME).write_text(json.dumps(log, indent=2) + "\n", encoding="utf-8")
    return checkpoints, log


def select_best(checkpoint_dir: str | Path) -> Path:
    """Checkpoint maximizing the logged validation metric; ties take the
    latest epoch."""
    checkpoint_dir = Path(checkpoint_dir)
    log_path = checkpoint_dir / LOG_NAME
    if not log_path.is_file():
        raise FormatError(f"no training log at {log_path}")
    log = json.loads(log_path.read_text(encoding="utf-8"))
    if not log:
        raise FormatError(f"{log_path} lists no epochs")
    best = None
    for row in log:
        if best is None or row["val_weighted_accuracy"] >= best["val_weighted_accuracy"]:
            best = row
    return checkpoint_dir / best["checkpoint"]


def evaluate_checkpoint(checkpoint_path: str | Path, manifest_path: str | Path, masks_dir: str | Path) -> float:
    """Validation weighted pixel accuracy of a saved checkpoint."""
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    model = UNetResNet18()
    model.load_state_dict(payload["state_dict"])
    manifest = read_manifest(manifest_path)
    data = SegmentationSamples(manifest.split_pairs("validation"), Path(masks_dir))
    loader = DataLoader(data, batch_size=2, shuffle=False)
    _, accuracy = _epoch_pass(model, loader)
    return accuracy
