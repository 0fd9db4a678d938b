"""Aggregation of completed runs into curve and comparison tables.

A run directory is any directory holding the ``run_metadata.json`` written
by the CLI plus a ``metrics.json``; runs belong to the same condition when
they share (mode, n_target). Comparisons are paired per run, ordered by
seed, which the emitted CSV headers state explicitly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from scipy import stats

from .model import NucleikitError

_MODE_ORDER = {"inter": 0, "intra": 1, "cross": 2}
_COMPARISONS = (("inter", "intra"), ("cross", "intra"), ("cross", "inter"))


class ReportError(NucleikitError):
    """Run records are missing or inconsistent."""


@dataclass(frozen=True)
class RunRecord:
    path: Path
    mode: str
    n_target: int
    seed: int
    cap_um: float
    f1: float


@dataclass(frozen=True)
class PairedTTest:
    t_statistic: float | None
    p_value: float
    degenerate: bool


def paired_t_test(a: list[float], b: list[float]) -> PairedTTest:
    """Two-sided paired Student t-test.

    Zero-variance differences leave t undefined; those cases are flagged
    and reported as p = 1.0 when the samples agree and p = 0.0 when they
    differ by a constant. The variance check uses a relative tolerance so
    that differences equal up to float rounding still count as constant.
    """
    if len(a) != len(b):
        raise ReportError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ReportError("paired t-test requires at least 2 paired runs")
    n = len(a)
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    sd = math.sqrt(sum((d - mean) ** 2 for d in diffs) / (n - 1))
    scale = max(abs(d) for d in diffs)
    if sd <= 1e-9 * scale or sd == 0.0:
        agree = abs(mean) <= 1e-9 * scale if scale > 0 else True
        return PairedTTest(t_statistic=None, p_value=1.0 if agree else 0.0, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), df=n - 1))
    return PairedTTest(t_statistic=t, p_value=p, degenerate=False)


def load_run_record(run_dir: str | Path) -> RunRecord:
    run_dir = Path(run_dir)
    meta_path = run_dir / "run_metadata.json"
    metrics_path = run_dir / "metrics.json"
    for p in (meta_path, metrics_path):
        if not p.is_file():
            raise ReportError(f"run directory {run_dir} is missing {p.name}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    metrics = json.loads(metrics_path.read_text(encoding="utf-8"))
    condition = meta.get("condition", {})
    try:
        mode = condition["mode"]
        n_target = int(condition["n_target"])
        seed = int(condition["seed"])
    except KeyError as exc:
        raise ReportError(
            f"{meta_path}: missing condition field {exc.args[0]!r}; "
            "annotate eval runs with --mode/--n-target/--run-seed"
        ) from None
    try:
        f1 = float(metrics["micro"]["f1"])
        cap_um = float(metrics["cap_um"])
    except KeyError as exc:
        raise ReportError(f"{metrics_path}: missing key {exc.args[0]!r}") from None
    return RunRecord(path=run_dir, mode=mode, n_target=n_target, seed=seed, cap_um=cap_um, f1=f1)


def _group_by_condition(records: list[RunRecord]) -> dict[tuple[str, int], list[RunRecord]]:
    groups: dict[tuple[str, int], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.mode, rec.n_target), []).append(rec)
    for key, group in groups.items():
        caps = {r.cap_um for r in group}
        if len(caps) != 1:
            raise ReportError(f"condition {key} mixes matching caps {sorted(caps)}")
        seeds = [r.seed for r in group]
        if len(set(seeds)) != len(seeds):
            raise ReportError(f"condition {key} has duplicate run seeds")
        group.sort(key=lambda r: r.seed)
    return groups


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def report_curves(run_dirs: list[str | Path], out_dir: str | Path) -> dict[str, Path]:
    """Write curves.csv (per-condition mean/std f1) and comparisons.csv.

    Comparison rows cover each mode pair present at a common n_target:
    relative improvement of the first mode over the second, and the paired
    t-test when both conditions carry >= 2 runs.
    """
    if not run_dirs:
        raise ReportError("no run directories given")
    records = [load_run_record(d) for d in run_dirs]
    groups = _group_by_condition(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    curves_path = out_dir / "curves.csv"
    with open(curves_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# one row per supervision condition; f1 is micro-averaged per run\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "n_target", "n_runs", "f1_mean", "f1_std"])
        for (mode, n_target) in sorted(groups, key=lambda k: (_MODE_ORDER.get(k[0], 9), k[1])):
            values = [r.f1 for r in groups[(mode, n_target)]]
            n = len(values)
            mean = sum(values) / n
            std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1)) if n >= 2 else None
            writer.writerow([mode, n_target, n, _fmt(mean), _fmt(std)])

    comparisons_path = out_dir / "comparisons.csv"
    with open(comparisons_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# paired t-test, two-sided; runs paired per run index after sorting by seed\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["n_target", "mode_a", "mode_b", "f1_mean_a", "f1_mean_b",
             "relative_improvement", "t_statistic", "p_value", "degenerate"]
        )
        n_targets = sorted({k[1] for k in groups})
        for n_target in n_targets:
            for mode_a, mode_b in _COMPARISONS:
                if (mode_a, n_target) not in groups or (mode_b, n_target) not in groups:
                    continue
                a = [r.f1 for r in groups[(mode_a, n_target)]]
                b = [r.f1 for r in groups[(mode_b, n_target)]]
                mean_a = sum(a) / len(a)
                mean_b = sum(b) / len(b)
                rel = (mean_a - mean_b) / mean_b if mean_b != 0 else math.inf
                if len(a) >= 2 and len(b) >= 2:
                    test = paired_t_test(a, b)
                    t_txt, p_txt = _fmt(test.t_statistic), _fmt(test.p_value)
                    degenerate = test.degenerate
                else:
                    t_txt, p_txt, degenerate = "", "", False
                writer.writerow(
                    [n_target, mode_a, mode_b, _fmt(mean_a), _fmt(mean_b),
                     _fmt(rel), t_txt, p_txt, str(degenerate).lower()]
                )

    return {"curves": curves_path, "comparisons": comparisons_path}
