import json

import pytest

from nucleitrain.formats import FormatError
from nucleitrain.train import LOG_NAME, TrainConfig, select_best, train


class TestTrainConfig:
    def test_bounds(self):
        base = dict(manifest="m", masks_dir="d", checkpoint_dir="c")
        with pytest.raises(ValueError):
            TrainConfig(epochs=0, **base)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0, **base)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0, **base)

    def test_from_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "manifest": "m.json", "masks_dir": "labels", "checkpoint_dir": "ckpts",
            "epochs": 3, "batch_size": 4, "learning_rate": 0.001, "seed": 5,
        }))
        cfg = TrainConfig.from_json(path)
        assert (cfg.epochs, cfg.batch_size, cfg.seed) == (3, 4, 5)


class TestTrainSmoke:
    def test_one_epoch_one_checkpoint_one_log_row(self, small_dataset, tmp_path):
        cfg = TrainConfig(
            manifest=str(small_dataset["manifest"]),
            masks_dir=str(small_dataset["labels"]),
            checkpoint_dir=str(tmp_path / "ckpts"),
            epochs=1,
            batch_size=2,
            seed=3,
        )
        checkpoints, log = train(cfg)
        assert len(checkpoints) == 1
        assert checkpoints[0].exists()
        assert len(log) == 1
        assert {"epoch", "checkpoint", "train_weighted_loss", "val_weighted_accuracy"} <= set(log[0])
        on_disk = json.loads((tmp_path / "ckpts" / LOG_NAME).read_text())
        assert on_disk == log

    def test_missing_masks_rejected_before_training(self, small_dataset, tmp_path):
        cfg = TrainConfig(
            manifest=str(small_dataset["manifest"]),
            masks_dir=str(tmp_path / "empty"),
            checkpoint_dir=str(tmp_path / "ckpts"),
            epochs=1,
        )
        (tmp_path / "empty").mkdir()
        with pytest.raises(FormatError, match="missing mask"):
            train(cfg)


def write_log(tmp_path, rows):
    ckpt_dir = tmp_path / "ckpts"
    ckpt_dir.mkdir(exist_ok=True)
    log = []
    for epoch, accuracy in rows:
        name = f"epoch_{epoch:03d}.pt"
        (ckpt_dir / name).write_bytes(b"stub")
        log.append({
            "epoch": epoch, "checkpoint": name,
            "train_weighted_loss": 1.0, "val_weighted_accuracy": accuracy,
        })
    (ckpt_dir / LOG_NAME).write_text(json.dumps(log))
    return ckpt_dir


class TestSelectBest:
    def test_single_checkpoint_selects_itself(self, tmp_path):
        ckpts = write_log(tmp_path, [(1, 0.5)])
        assert select_best(ckpts).name == "epoch_001.pt"

    def test_argmax(self, tmp_path):
        ckpts = write_log(tmp_path, [(1, 0.7), (2, 0.9)])
        assert select_best(ckpts).name == "epoch_002.pt"

    def test_tie_takes_latest_epoch(self, tmp_path):
        ckpts = write_log(tmp_path, [(3, 0.8), (5, 0.6), (7, 0.8)])
        assert select_best(ckpts).name == "epoch_007.pt"

    def test_empty_log_rejected(self, tmp_path):
        ckpt_dir = tmp_path / "ckpts"
        ckpt_dir.mkdir()
        (ckpt_dir / LOG_NAME).write_text("[]")
        with pytest.raises(FormatError, match="no epochs"):
            select_best(ckpt_dir)

    def test_missing_log_rejected(self, tmp_path):
        with pytest.raises(FormatError, match="training log"):
            select_best(tmp_path)
