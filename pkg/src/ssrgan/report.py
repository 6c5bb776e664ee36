"""Merge per-run CSVs into NMSE-vs-level and NMSE-vs-epoch curves."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ssrgan.errors import EmptyInputError, MalformedCSVError
from ssrgan.training import EVAL_HEADER, METRICS_HEADER

EPOCH_HEADER = ["corruption_level", "epoch", "nmse"]


def _read_csv(path: Path, header: list, types: list) -> list:
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise MalformedCSVError(path, 1, f"expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise MalformedCSVError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([t(v) for t, v in zip(types, row)])
            except ValueError as exc:
                raise MalformedCSVError(path, lineno, str(exc)) from None
    return rows


def _run_info(run: Path, eval_rows: list) -> tuple[str, float]:
    """(dataset name, corruption level) of a run directory."""
    cfg = run / "config.json"
    if cfg.exists():
        d = json.loads(cfg.read_text(encoding="utf-8"))
        return str(d.get("dataset_name", run.name)), float(d["corruption_level"])
    if eval_rows:
        return eval_rows[0][0], eval_rows[0][1]
    raise MalformedCSVError(cfg, 0, "run has neither config.json nor eval.csv")


def find_runs(runs_dir) -> list:
    runs_dir = Path(runs_dir)
    if not runs_dir.is_dir():
        return []
    cands = [runs_dir] + sorted(p for p in runs_dir.rglob("*") if p.is_dir())
    return [p for p in cands if (p / "metrics.csv").exists()]


def collect(runs_dir):
    """Return (level rows, epoch rows) gathered from every run under ``runs_dir``."""
    runs = find_runs(runs_dir)
    if not runs:
        raise EmptyInputError(f"{runs_dir}: no run directories with metrics.csv")
    level_rows, epoch_rows = [], []
    for run in runs:
        metrics = _read_csv(run / "metrics.csv", METRICS_HEADER, [int, float, float, float, float])
        evals = []
        if (run / "eval.csv").exists():
            evals = _read_csv(run / "eval.csv", EVAL_HEADER, [str, float, int, float, int])
        dataset, level = _run_info(run, evals)
        epoch_rows += [[level, m[0], m[4]] for m in metrics]
        if evals:
            level_rows += evals
        elif metrics:
            # no test evaluation: fall back to the last training-subset NMSE
            level_rows.append([dataset, level, metrics[-1][0] + 1, metrics[-1][4], 0])
    level_rows.sort(key=lambda r: (r[1], r[0]))
    epoch_rows.sort(key=lambda r: (r[0], r[1]))
    return level_rows, epoch_rows


def _plot(path: Path, series: dict, xlabel: str, title: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5), dpi=100)
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("NMSE")
    ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def write_report(runs_dir, out_dir, plots: bool = True) -> tuple[list, list]:
    out_dir = Path(out_dir)
    level_rows, epoch_rows = collect(runs_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "nmse_vs_level.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_HEADER)
        w.writerows([[r[0], repr(r[1]), r[2], repr(r[3]), r[4]] for r in level_rows])
    with (out_dir / "nmse_vs_epoch.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPOCH_HEADER)
        w.writerows([[repr(r[0]), r[1], repr(r[2])] for r in epoch_rows])
    if plots:
        by_ds = {}
        for r in level_rows:
            xs, ys = by_ds.setdefault(r[0], ([], []))
            xs.append(r[1])
            ys.append(r[3])
        _plot(out_dir / "nmse_vs_level.png", by_ds, "corruption level", "NMSE vs corruption level")
        by_level = {}
        for lvl, ep, v in epoch_rows:
            xs, ys = by_level.setdefault(f"p={lvl:g}", ([], []))
            xs.append(ep)
            ys.append(v)
        _plot(out_dir / "nmse_vs_epoch.png", by_level, "epoch", "NMSE per epoch")
    return level_rows, epoch_rows
