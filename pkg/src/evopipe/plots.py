"""Optional SVG line charts over the experiment's per-generation CSVs.

Matplotlib is imported lazily so the engine itself never needs it; rendering
is local file output only.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

from .experiment import ACCURACY_BY_GENERATION, TRIE_BY_GENERATION


def _read_rows(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _line_chart(ax, series: dict[str, tuple[list[int], list[float]]], title: str, ylabel: str):
    for method, (xs, ys) in sorted(series.items()):
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1.2, label=method)
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("generation", fontsize=8)
    ax.set_ylabel(ylabel, fontsize=8)
    ax.tick_params(labelsize=7)
    ax.legend(fontsize=7)


def render_all(out_dir) -> list[Path]:
    """Render one SVG per task and metric family; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    root = Path(out_dir)
    written: list[Path] = []

    acc_path = root / ACCURACY_BY_GENERATION
    if acc_path.exists():
        by_task: dict[str, dict[str, tuple[list[int], list[float]]]] = defaultdict(dict)
        holdout_by_task: dict[str, dict[str, tuple[list[int], list[float]]]] = defaultdict(dict)
        for row in _read_rows(acc_path):
            key = (row["task"], row["method"])
            by_task[row["task"]].setdefault(row["method"], ([], []))
            xs, ys = by_task[row["task"]][row["method"]]
            xs.append(int(row["generation"]))
            ys.append(float(row["best_train_mean"]))
            if row["holdout_mean"]:
                holdout_by_task[row["task"]].setdefault(row["method"], ([], []))
                hx, hy = holdout_by_task[row["task"]][row["method"]]
                hx.append(int(row["generation"]))
                hy.append(float(row["holdout_mean"]))
        for task, series in by_task.items():
            fig, axes = plt.subplots(1, 2, figsize=(8, 3))
            _line_chart(axes[0], series, f"{task}: best training CV accuracy", "balanced accuracy")
            _line_chart(
                axes[1], holdout_by_task.get(task, {}),
                f"{task}: holdout accuracy of best model", "balanced accuracy",
            )
            fig.tight_layout()
            path = root / f"accuracy_{task}.svg"
            fig.savefig(path)
            plt.close(fig)
            written.append(path)

    trie_path = root / TRIE_BY_GENERATION
    if trie_path.exists():
        metrics = (("ratio", "leaf-to-node ratio"), ("root_efficiency", "root global efficiency"),
                   ("nodes", "trie nodes"))
        per_task: dict[str, list[dict]] = defaultdict(list)
        for row in _read_rows(trie_path):
            per_task[row["task"]].append(row)
        for task, rows in per_task.items():
            fig, axes = plt.subplots(1, len(metrics), figsize=(4 * len(metrics), 3))
            for ax, (column, label) in zip(axes, metrics):
                series: dict[str, tuple[list[int], list[float]]] = {}
                for row in rows:
                    series.setdefault(row["method"], ([], []))
                    xs, ys = series[row["method"]]
                    xs.append(int(row["generation"]))
                    ys.append(float(row[column]))
                _line_chart(ax, series, f"{task}: median {label}", label)
            fig.tight_layout()
            path = root / f"trie_{task}.svg"
            fig.savefig(path)
            plt.close(fig)
            written.append(path)
    return written
