"""nucleitrain CLI: fit, select, export."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .export import export_posteriors
from .formats import FormatError
from .train import TrainConfig, select_best, train


def _cmd_fit(args) -> int:
    config = TrainConfig.from_json(args.config)
    checkpoints, log = train(config)
    print(f"{len(checkpoints)} checkpoints -> {config.checkpoint_dir}")
    print(f"final weighted loss {log[-1]['train_weighted_loss']:.4f}")
    return 0


def _cmd_select(args) -> int:
    best = select_best(args.checkpoints)
    print(best)
    return 0


def _cmd_export(args) -> int:
    images = sorted(Path(args.images).glob("*.png"))
    if not images:
        raise FormatError(f"no .png images under {args.images}")
    written = export_posteriors(args.checkpoint, images, args.out, tile=args.tile)
    print(f"{len(written)} posterior maps -> {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nucleitrain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train from a JSON config")
    p.add_argument("--config", required=True, type=Path)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("select", help="print the best checkpoint by validation metric")
    p.add_argument("--checkpoints", required=True, type=Path)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("export", help="export posterior maps for a directory of images")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--images", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--tile", type=int, default=0, help="tile size for larger images")
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
