"""Multi-run experiments: seeded runs per (task, method), aggregation, reports.

Runs are independent given their seeds, so they may execute in parallel
worker processes; every artifact is a deterministic function of (config,
seed), which keeps outputs identical regardless of scheduling. Statistics are
always computed from the persisted files, so `analyze` on an experiment
directory reproduces exactly what the experiment reported.
"""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    TaskComparison,
    accuracy_confidence_interval,
    compare_methods,
    report_csv,
    report_markdown,
)
from .config import ExperimentConfig, materialize_task
from .engine import run_single
from .errors import AnalysisError, EvoPipeError
from .runlog import RunLog, load_runlog

ACCURACY_BY_GENERATION = "accuracy_by_generation.csv"
TRIE_BY_GENERATION = "trie_by_generation.csv"
REPORT_CSV = "report.csv"
REPORT_MD = "report.md"


def _run_job(config: ExperimentConfig, task_spec, method: str, run_index: int) -> str:
    task_name, train, holdout = materialize_task(task_spec, config)
    out_dir = Path(config.out) / task_name / method
    run_single(
        train,
        holdout,
        method,
        config.run_config(),
        seed=config.base_seed + run_index,
        task_name=task_name,
        out_dir=out_dir,
        run_index=run_index,
    )
    return f"{task_name}/{method}/run_{run_index}"


def _discard_partial_run(config: ExperimentConfig, task_spec, method: str, run_index: int):
    if isinstance(task_spec, str):
        task_name = task_spec
    else:
        task_name = task_spec.name
    run_dir = Path(config.out) / task_name / method
    for suffix in (f"run_{run_index}.log", f"run_{run_index}_trie.csv", f"run_{run_index}.dot"):
        try:
            (run_dir / suffix).unlink(missing_ok=True)
        except OSError:
            pass


def run_experiment(config: ExperimentConfig, echo=print) -> list[TaskComparison]:
    """Run the full grid, then aggregate reports from the persisted artifacts.

    Failed runs are reported on stderr and excluded; they never abort the
    experiment silently.
    """
    jobs = [
        (task_spec, method, run_index)
        for task_spec in config.all_tasks()
        for method in config.methods
        for run_index in range(config.runs)
    ]
    workers = config.jobs if config.jobs > 0 else None
    failures = 0
    if workers == 1:
        for task_spec, method, run_index in jobs:
            try:
                name = _run_job(config, task_spec, method, run_index)
                echo(f"finished {name}")
            except EvoPipeError as exc:
                failures += 1
                print(f"warning: run failed and was excluded: {exc}", file=sys.stderr)
                _discard_partial_run(config, task_spec, method, run_index)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_run_job, config, task_spec, method, run_index): (
                    task_spec, method, run_index,
                )
                for task_spec, method, run_index in jobs
            }
            for future, key in futures.items():
                try:
                    echo(f"finished {future.result()}")
                except Exception as exc:  # worker died or raised
                    failures += 1
                    print(f"warning: run failed and was excluded: {exc}", file=sys.stderr)
                    _discard_partial_run(config, *key)
    if failures:
        print(f"warning: {failures} of {len(jobs)} runs excluded", file=sys.stderr)

    rows: list[TaskComparison] = []
    if len(config.methods) >= 2:
        rows = analyze_runs(config.out, config.methods[0], config.methods[1])
        write_reports(config.out, rows)
    write_generation_aggregates(config.out)
    return rows


# ---------------------------------------------------------------------------
# Aggregation over persisted artifacts
# ---------------------------------------------------------------------------

def _discover(out_dir) -> dict[str, dict[str, list[Path]]]:
    """Map task -> method -> sorted run log paths under an experiment directory."""
    root = Path(out_dir)
    layout: dict[str, dict[str, list[Path]]] = {}
    for task_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        methods = {}
        for method_dir in sorted(p for p in task_dir.iterdir() if p.is_dir()):
            logs = sorted(
                method_dir.glob("run_*.log"),
                key=lambda p: int(p.stem.split("_")[1]),
            )
            if logs:
                methods[method_dir.name] = logs
        if methods:
            layout[task_dir.name] = methods
    return layout


def analyze_runs(out_dir, method_a: str, method_b: str) -> list[TaskComparison]:
    """Build the two-method comparison table from a directory of run logs."""
    layout = _discover(out_dir)
    if not layout:
        raise AnalysisError(f"no run logs found under {out_dir}")
    rows = []
    for task, methods in layout.items():
        if method_a not in methods or method_b not in methods:
            print(
                f"warning: task {task!r} lacks runs for both methods, skipped",
                file=sys.stderr,
            )
            continue
        logs_a = [load_runlog(p) for p in methods[method_a]]
        logs_b = [load_runlog(p) for p in methods[method_b]]
        rows.append(compare_methods(task, logs_a, logs_b))
    if not rows:
        raise AnalysisError(f"no task under {out_dir} has runs for both methods")
    return rows


def write_reports(out_dir, rows: list[TaskComparison]) -> None:
    root = Path(out_dir)
    (root / REPORT_CSV).write_text(report_csv(rows), encoding="utf-8")
    (root / REPORT_MD).write_text(report_markdown(rows), encoding="utf-8")


def _best_series(log: RunLog) -> tuple[list[float], list[float | None]]:
    train = [g.best_cv_accuracy() for g in log.generations]
    holdout = [g.best_holdout for g in log.generations]
    return train, holdout


def write_generation_aggregates(out_dir) -> None:
    """Per-generation curves: accuracy means with CIs, and median trie metrics."""
    root = Path(out_dir)
    layout = _discover(out_dir)

    acc_lines = [
        "task,method,generation,best_train_mean,best_train_ci_low,best_train_ci_high,"
        "holdout_mean,holdout_ci_low,holdout_ci_high"
    ]
    trie_lines = ["task,method,generation,nodes,leaves,ratio,root_efficiency"]
    for task, methods in layout.items():
        for method, log_paths in methods.items():
            logs = [load_runlog(p) for p in log_paths]
            series = [_best_series(log) for log in logs]
            n_gens = min(len(log.generations) for log in logs)
            for g in range(n_gens):
                train_vals = [train[g] for train, _ in series]
                holdout_vals = [hold[g] for _, hold in series if hold[g] is not None]
                line = f"{task},{method},{g},{np.mean(train_vals):.6f}"
                if len(train_vals) >= 2:
                    lo, hi = accuracy_confidence_interval(train_vals)
                    line += f",{lo:.6f},{hi:.6f}"
                else:
                    line += ",,"
                if len(holdout_vals) >= 2:
                    lo, hi = accuracy_confidence_interval(holdout_vals)
                    line += f",{np.mean(holdout_vals):.6f},{lo:.6f},{hi:.6f}"
                else:
                    line += ",,,"
                acc_lines.append(line)

            per_gen: dict[int, list[tuple[float, float, float, float]]] = {}
            for log_path in log_paths:
                metrics_path = log_path.with_name(log_path.stem + "_trie.csv")
                if not metrics_path.exists():
                    continue
                for row in metrics_path.read_text(encoding="utf-8").splitlines()[1:]:
                    gen, nodes, leaves, ratio, eff = row.split(",")
                    per_gen.setdefault(int(gen), []).append(
                        (float(nodes), float(leaves), float(ratio), float(eff))
                    )
            for g in sorted(per_gen):
                cols = np.array(per_gen[g])
                med = np.median(cols, axis=0)
                trie_lines.append(
                    f"{task},{method},{g},{med[0]:.1f},{med[1]:.1f},{med[2]:.6f},{med[3]:.6f}"
                )

    (root / ACCURACY_BY_GENERATION).write_text("\n".join(acc_lines) + "\n", encoding="utf-8")
    (root / TRIE_BY_GENERATION).write_text("\n".join(trie_lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class TrieSummary:
    """Final-generation median trie metrics for one (task, method)."""

    task: str
    method: str
    nodes: float
    ratio: float


def final_trie_medians(out_dir) -> list[TrieSummary]:
    """Median final-generation node count and leaf ratio per (task, method)."""
    layout = _discover(out_dir)
    summaries = []
    for task, methods in layout.items():
        for method, log_paths in methods.items():
            finals = []
            for log_path in log_paths:
                metrics_path = log_path.with_name(log_path.stem + "_trie.csv")
                if not metrics_path.exists():
                    continue
                rows = metrics_path.read_text(encoding="utf-8").splitlines()
                if len(rows) < 2:
                    continue
                gen, nodes, leaves, ratio, eff = rows[-1].split(",")
                finals.append((float(nodes), float(ratio)))
            if finals:
                arr = np.array(finals)
                summaries.append(
                    TrieSummary(
                        task=task,
                        method=method,
                        nodes=float(np.median(arr[:, 0])),
                        ratio=float(np.median(arr[:, 1])),
                    )
                )
    return summaries
