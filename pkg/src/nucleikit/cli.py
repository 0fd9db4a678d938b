"""Command-line front door wiring the toolkit into end-to-end flows.

Every invocation writes a metadata record beside its outputs (config echo,
library versions, seed) with no timestamps, so re-running a recorded
configuration reproduces primary outputs byte for byte. Errors surface as
one machine-parseable JSON line on stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .detect import detect_centers, read_detections, write_detections
from .fixtures import FixtureSpec, generate_dataset
from .io import (
    image_dims,
    read_annotations,
    read_gray_image,
    read_pmap,
    write_gray_image,
    write_label_mask,
    write_pmap,
)
from .manifest import MODES, compose_training_set, load_manifest
from .matching import aggregate_micro, compute_metrics, match_hungarian
from .model import NucleikitError, PosteriorMap, ResolutionSpec, Thresholds, ValidationError
from .normalize import normalize_linear
from .report import report_curves
from .tuning import GridSpec, grid_search
from .voronoi import LabelParams, generate_label_mask, generate_weight_map

log = logging.getLogger("nucleikit")


def _parallel_map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_metadata(args: argparse.Namespace, directory: Path, condition: dict | None = None) -> None:
    record = {
        "command": args.command if args.command != "dataset" else f"dataset {args.dataset_command}",
        "package": "nucleikit",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": args.seed,
        "threads": args.threads,
        "arguments": {
            k: _jsonable(v)
            for k, v in sorted(vars(args).items())
            if k not in ("func", "command", "dataset_command") and not callable(v)
        },
    }
    if condition is not None:
        record["condition"] = condition
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "run_metadata.json").write_text(
        json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parse_weights(text: str) -> tuple[float, float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValidationError(f"--weights expects 4 comma-separated values, got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p.strip()) for p in text.split(",") if p.strip())


def _parse_int_list(text: str) -> list[int]:
    return [int(p.strip()) for p in text.split(",") if p.strip()]


def _mask_stem(annotations: Path) -> str:
    return annotations.stem


# ---------------------------------------------------------------- commands


def _cmd_label(args) -> int:
    manifest = load_manifest(args.manifest)
    params = LabelParams(center_radius_px=args.center_radius, class_weights=args.weights)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = manifest.entries if args.split is None else manifest.split_entries(args.split)

    todo = {}
    for entry in entries:
        stem = _mask_stem(entry.annotations)
        previous = todo.get(stem)
        if previous is not None and previous != (entry.annotations, entry.image):
            raise ValidationError(
                f"annotation stem {stem!r} is ambiguous: {previous[0]} vs {entry.annotations}"
            )
        todo[stem] = (entry.annotations, entry.image, entry.resolution)

    def one(item):
        stem, (ann_path, image_path, resolution) = item
        annotations = read_annotations(ann_path, resolution, image_dims(image_path))
        mask = generate_label_mask(annotations, params)
        write_label_mask(mask, out / f"{stem}.mask.png")
        write_pmap(generate_weight_map(mask, params), out / f"{stem}.weights.pmap")
        return stem

    done = _parallel_map(one, sorted(todo.items()), args.threads)
    _write_metadata(args, out)
    log.info("labeled %d annotation sets into %s", len(done), out)
    print(f"wrote {len(done)} mask/weight pairs to {out}")
    return 0


def _cmd_normalize(args) -> int:
    image = read_gray_image(args.infile)
    result = normalize_linear(image, low_pct=args.low, high_pct=args.high)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_gray_image(result, out, bit_depth=args.bits)
    _write_metadata(args, out.parent)
    return 0


def _cmd_detect(args) -> int:
    pmap = read_pmap(args.pmap)
    if not isinstance(pmap, PosteriorMap):
        raise ValidationError(f"{args.pmap} holds a 1-channel map; detection needs 4 channels")
    thresholds = Thresholds(kappa_e=args.kappa_e, kappa_c=args.kappa_c)
    detections = detect_centers(pmap, thresholds, ResolutionSpec(args.mpp))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_detections(detections, out)
    _write_metadata(args, out.parent)
    print(f"{len(detections)} detections -> {out}")
    return 0


def _cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    entries = manifest.split_entries(args.split)
    if not entries:
        raise ValidationError(f"manifest has no entries in split {args.split!r}")
    detections_dir = Path(args.detections)

    def one(entry):
        stem = entry.image.stem
        det_path = detections_dir / f"{stem}.csv"
        detections = read_detections(det_path, entry.resolution)
        annotations = read_annotations(entry.annotations, entry.resolution, image_dims(entry.image))
        return stem, match_hungarian(detections, annotations, args.cap_um)

    matched = _parallel_map(one, entries, args.threads)
    per_image = {}
    for stem, result in matched:
        m = compute_metrics(result)
        per_image[stem] = {
            "tp": result.tp, "fp": result.fp, "fn": result.fn,
            "precision": m.precision, "recall": m.recall, "f1": m.f1,
        }
    micro = aggregate_micro([r for _, r in matched])
    payload = {
        "cap_um": args.cap_um,
        "split": args.split,
        "images": per_image,
        "micro": {
            "tp": sum(r.tp for _, r in matched),
            "fp": sum(r.fp for _, r in matched),
            "fn": sum(r.fn for _, r in matched),
            "precision": micro.precision, "recall": micro.recall, "f1": micro.f1,
        },
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    condition = None
    if (args.mode is None) != (args.n_target is None):
        raise ValidationError("--mode and --n-target must be given together")
    if args.mode is not None:
        condition = {
            "mode": args.mode,
            "n_target": args.n_target,
            "seed": args.run_seed if args.run_seed is not None else args.seed,
        }
    _write_metadata(args, out.parent, condition=condition)
    print(f"micro f1 {micro.f1:.4f} over {len(entries)} images -> {out}")
    return 0


def _cmd_tune(args) -> int:
    manifest = load_manifest(args.manifest)
    entries = manifest.split_entries(args.split)
    if not entries:
        raise ValidationError(f"manifest has no entries in split {args.split!r}")
    pmaps_dir = Path(args.pmaps)

    def one(entry):
        pmap = read_pmap(pmaps_dir / f"{entry.image.stem}.pmap")
        if not isinstance(pmap, PosteriorMap):
            raise ValidationError(f"{entry.image.stem}.pmap holds a 1-channel map")
        annotations = read_annotations(entry.annotations, entry.resolution, image_dims(entry.image))
        return pmap, annotations

    validation = _parallel_map(one, entries, args.threads)
    grid_kwargs = {}
    if args.kappa_e_values:
        grid_kwargs["kappa_e_values"] = args.kappa_e_values
    if args.kappa_c_values:
        grid_kwargs["kappa_c_values"] = args.kappa_c_values
    thresholds, metrics, table = grid_search(validation, GridSpec(**grid_kwargs), cap_um=args.cap_um)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(
            {
                "kappa_e": thresholds.kappa_e,
                "kappa_c": thresholds.kappa_c,
                "cap_um": args.cap_um,
                "n_images": len(entries),
                "metrics": {"precision": metrics.precision, "recall": metrics.recall, "f1": metrics.f1},
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    grid_path = out.parent / (out.stem + "_grid.csv")
    with open(grid_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("kappa_e,kappa_c,tp,fp,fn,precision,recall,f1\n")
        for p in table:
            fh.write(
                f"{p.kappa_e!r},{p.kappa_c!r},{p.tp},{p.fp},{p.fn},"
                f"{p.precision!r},{p.recall!r},{p.f1!r}\n"
            )
    _write_metadata(args, out.parent)
    print(
        f"best kappa_e={thresholds.kappa_e} kappa_c={thresholds.kappa_c} "
        f"micro f1 {metrics.f1:.4f} -> {out}"
    )
    return 0


def _cmd_dataset_build(args) -> int:
    manifest = load_manifest(args.manifest)
    pairs = compose_training_set(manifest, args.mode, args.n_target)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = [{"image": str(p.image), "annotations": str(p.annotations)} for p in pairs]
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _write_metadata(args, out.parent)
    print(f"{len(pairs)} pairs -> {out}")
    return 0


def _cmd_fixtures(args) -> int:
    out = Path(args.out)
    spec = FixtureSpec(
        seed=args.seed,
        width=args.width,
        height=args.height,
        n_nuclei=args.n_nuclei,
        min_separation_px=args.min_separation,
        bump_sigma_px=args.bump_sigma,
        noise_amplitude=args.noise,
        microns_per_pixel=args.mpp,
    )
    n_validation = args.n_validation if args.n_validation is not None else args.n_images // 4
    n_test = args.n_test if args.n_test is not None else args.n_images // 4
    n_train = args.n_images - n_validation - n_test
    if n_train < 0:
        raise ValidationError(
            f"--n-validation {n_validation} plus --n-test {n_test} exceed --n-images {args.n_images}"
        )
    variant_select = _parse_int_list(args.variant_select) if args.variant_select else None

    manifests = []
    for rep in range(args.repeats):
        rep_dir = out if args.repeats == 1 else out / f"rep_{rep:02d}"
        manifests.append(
            generate_dataset(
                rep_dir,
                seed=args.seed + rep,
                n_train=n_train,
                n_validation=n_validation,
                n_test=n_test,
                spec=spec,
                n_source=args.n_source,
                variants_per_source=args.variants,
                variant_select=variant_select,
            )
        )
    _write_metadata(args, out)
    for m in manifests:
        print(m)
    return 0


def _cmd_report(args) -> int:
    out = Path(args.out)
    paths = report_curves([Path(d) for d in args.runs], out)
    _write_metadata(args, out)
    for p in paths.values():
        print(p)
    return 0


# ----------------------------------------------------------------- parser


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, default=None,
                        help="JSON file supplying any flag; command line takes precedence")
    shared.add_argument("--threads", type=int, default=1, help="worker pool size")
    shared.add_argument("--seed", type=int, default=0, help="global random seed")
    shared.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])

    parser = argparse.ArgumentParser(
        prog="nucleikit",
        description="Voronoi labeling, posterior-map nuclei detection, and matching-based evaluation",
    )
    parser.add_argument("--version", action="version", version=f"nucleikit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", parents=[shared], help="expand annotations into label masks and weight maps")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--split", default=None, choices=["train", "validation", "test"])
    p.add_argument("--center-radius", type=float, default=2.0)
    p.add_argument("--weights", type=_parse_weights, default=(1.0, 1.0, 5.0, 10.0),
                   metavar="BG,OBJ,EDGE,CENTER")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("normalize", parents=[shared], help="linear min/max intensity normalization")
    p.add_argument("--in", dest="infile", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=100.0)
    p.add_argument("--bits", type=int, default=16, choices=[8, 16])
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("detect", parents=[shared], help="detect nuclei centers in a posterior map")
    p.add_argument("--pmap", required=True, type=Path)
    p.add_argument("--kappa-e", required=True, type=float)
    p.add_argument("--kappa-c", required=True, type=float)
    p.add_argument("--mpp", required=True, type=float, help="microns per pixel")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", parents=[shared], help="match detections against annotations")
    p.add_argument("--detections", required=True, type=Path,
                   help="directory of per-image <image-stem>.csv detection files")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])
    p.add_argument("--cap-um", type=float, default=5.0)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--mode", default=None, choices=list(MODES),
                   help="condition annotation for report grouping")
    p.add_argument("--n-target", type=int, default=None)
    p.add_argument("--run-seed", type=int, default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("tune", parents=[shared], help="grid-search detection thresholds")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--split", default="validation", choices=["train", "validation", "test"])
    p.add_argument("--pmaps", required=True, type=Path,
                   help="directory of per-image <image-stem>.pmap posterior maps")
    p.add_argument("--cap-um", type=float, default=5.0)
    p.add_argument("--kappa-e-values", type=_parse_float_list, default=())
    p.add_argument("--kappa-c-values", type=_parse_float_list, default=())
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("dataset", parents=[], help="training-set composition")
    dataset_sub = p.add_subparsers(dest="dataset_command", required=True)
    b = dataset_sub.add_parser("build", parents=[shared], help="compose a training set")
    b.add_argument("--manifest", required=True, type=Path)
    b.add_argument("--mode", required=True, choices=list(MODES))
    b.add_argument("--n-target", type=int, default=None, help="target-domain nucleus budget")
    b.add_argument("--out", required=True, type=Path)
    b.set_defaults(func=_cmd_dataset_build, command="dataset")

    p = sub.add_parser("fixtures", parents=[shared], help="generate a synthetic dataset")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n-images", type=int, default=4)
    p.add_argument("--n-validation", type=int, default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--n-nuclei", type=int, default=10)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--min-separation", type=float, default=10.0)
    p.add_argument("--bump-sigma", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--mpp", type=float, default=0.5)
    p.add_argument("--variants", type=int, default=0, help="ensemble variants per source entry")
    p.add_argument("--n-source", type=int, default=0, help="train entries that carry ensembles")
    p.add_argument("--variant-select", default=None,
                   help="comma-separated variant indices to list in the manifest")
    p.add_argument("--repeats", type=int, default=1,
                   help="emit this many replica datasets with consecutive seeds")
    p.set_defaults(func=_cmd_fixtures)

    p = sub.add_parser("report", parents=[shared], help="aggregate completed runs into curve data")
    p.add_argument("--runs", required=True, nargs="+", type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_report)

    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    if args.config is None:
        return
    path = Path(args.config)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ValidationError(f"{path}: config must be a JSON object of flag values")
    known = vars(args)
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("func", "command", "dataset_command", "config"):
            raise ValidationError(f"{path}: unknown config key {key!r}")
        flag = "--" + dest.replace("_", "-")
        given = any(tok == flag or tok.startswith(flag + "=") for tok in argv)
        if not given:
            if isinstance(value, str) and isinstance(known[dest], Path):
                value = Path(value)
            setattr(args, dest, value)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()))
    try:
        _apply_config(args, argv)
        return args.func(args)
    except NucleikitError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
