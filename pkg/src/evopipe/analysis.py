"""Post-run statistics over persisted run logs.

Convergence points, Mann-Whitney-U comparisons, confidence intervals for
holdout accuracy, permutation feature importance for fitted pipelines, and the
two-method comparison table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .data import Dataset
from .errors import AnalysisError
from .evaluation import FittedPipeline, balanced_accuracy
from .runlog import RunLog

CONVERGENCE_FRACTION = 0.99
INFORMATIVE_GAIN = 1.10


def convergence_point(runlog: RunLog) -> int:
    """First generation whose best CV accuracy reaches 99% of the final best.

    Only the accuracy objective is consulted; pipeline size plays no role.
    """
    if not runlog.generations:
        raise AnalysisError("run log holds no generations")
    final_best = runlog.generations[-1].best_cv_accuracy()
    if final_best == float("-inf"):
        raise AnalysisError("every pipeline in the final generation failed")
    threshold = CONVERGENCE_FRACTION * final_best
    for gen in runlog.generations:
        if gen.best_cv_accuracy() >= threshold:
            return gen.index
    raise AnalysisError("no generation reaches the convergence threshold")


def holdout_at_convergence(runlog: RunLog) -> float | None:
    """Recorded holdout accuracy of the best model at the convergence point."""
    point = convergence_point(runlog)
    for gen in runlog.generations:
        if gen.index == point:
            return gen.best_holdout
    return None


class MannWhitneyResult(NamedTuple):
    statistic: float
    p_value: float


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> MannWhitneyResult:
    """Two-sided Mann-Whitney-U test via the normal approximation.

    The statistic counts pairs where a beats b (ties count half), computed
    from midranks; the p-value uses the tie-corrected variance and a
    continuity correction. All values tied yields p = 1.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    n, m = a.size, b.size
    combined = np.concatenate([a, b])
    ranks = _midranks(combined)
    rank_sum_a = ranks[:n].sum()
    u = rank_sum_a - n * (n + 1) / 2.0

    total = n + m
    _, tie_counts = np.unique(combined, return_counts=True)
    tie_term = float((tie_counts**3 - tie_counts).sum())
    variance = n * m / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if variance <= 0.0:
        return MannWhitneyResult(float(u), 1.0)
    shift = u - n * m / 2.0
    z = (shift - 0.5 * np.sign(shift)) / math.sqrt(variance)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return MannWhitneyResult(float(u), min(1.0, float(p)))


def accuracy_confidence_interval(values: Sequence[float]) -> tuple[float, float]:
    """mean +/- 1.96 sample standard deviations, clamped to [0, 1]."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise AnalysisError("need at least two runs for a confidence interval")
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1))
    return max(0.0, mean - 1.96 * sd), min(1.0, mean + 1.96 * sd)


def permutation_feature_importance(
    fitted: FittedPipeline,
    dataset: Dataset,
    rng: np.random.Generator,
    repeats: int = 10,
) -> list[tuple[str, float]]:
    """Accuracy drop when one feature column is shuffled, averaged over repeats.

    Returns (feature name, importance) pairs sorted by decreasing importance;
    features the model never reads score about zero.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    baseline = balanced_accuracy(dataset.labels, fitted.predict(dataset.features))
    importances = []
    for col, name in enumerate(dataset.feature_names):
        drops = []
        for _ in range(repeats):
            shuffled = dataset.features.copy()
            shuffled[:, col] = shuffled[rng.permutation(dataset.n_rows), col]
            drops.append(baseline - balanced_accuracy(dataset.labels, fitted.predict(shuffled)))
        importances.append((name, float(np.mean(drops))))
    importances.sort(key=lambda pair: (-pair[1], pair[0]))
    return importances


def _generation_mean(records) -> float:
    scores = [r.cv_accuracy for r in records if r.cv_accuracy is not None]
    if not scores:
        raise AnalysisError("a generation holds no successfully evaluated pipeline")
    return float(np.mean(scores))


def task_informativeness_filter(run_logs: Iterable[RunLog]) -> bool:
    """True when the mean CV accuracy over all pipelines grows by at least 10%
    from generation 0 to the final generation, pooled across the task's runs."""
    first, last = [], []
    for log in run_logs:
        if not log.generations:
            continue
        first.extend(log.generations[0].individuals)
        last.extend(log.generations[-1].individuals)
    if not first or not last:
        raise AnalysisError("no generations found across the given run logs")
    return _generation_mean(last) >= INFORMATIVE_GAIN * _generation_mean(first)


# ---------------------------------------------------------------------------
# Two-method comparison (the comparison table's row shape)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodStats:
    method: str
    convergence_points: tuple[int, ...]
    holdout_accuracies: tuple[float, ...]

    @property
    def mean_convergence(self) -> float:
        return float(np.mean(self.convergence_points))

    @property
    def mean_holdout(self) -> float:
        return float(np.mean(self.holdout_accuracies))


@dataclass(frozen=True)
class TaskComparison:
    task: str
    a: MethodStats
    b: MethodStats
    p_convergence: float
    p_holdout: float
    informative: bool


def method_stats(method: str, run_logs: Sequence[RunLog]) -> MethodStats:
    points, holdouts = [], []
    for log in run_logs:
        point = convergence_point(log)
        holdout = holdout_at_convergence(log)
        if holdout is None:
            raise AnalysisError(f"no holdout accuracy recorded at generation {point}")
        points.append(point)
        holdouts.append(holdout)
    return MethodStats(method, tuple(points), tuple(holdouts))


def compare_methods(
    task: str, logs_a: Sequence[RunLog], logs_b: Sequence[RunLog]
) -> TaskComparison:
    if not logs_a or not logs_b:
        raise AnalysisError(f"task {task!r}: both methods need at least one run")
    stats_a = method_stats(logs_a[0].method, logs_a)
    stats_b = method_stats(logs_b[0].method, logs_b)
    p_conv = mann_whitney_u(stats_a.convergence_points, stats_b.convergence_points).p_value
    p_hold = mann_whitney_u(stats_a.holdout_accuracies, stats_b.holdout_accuracies).p_value
    return TaskComparison(
        task=task,
        a=stats_a,
        b=stats_b,
        p_convergence=p_conv,
        p_holdout=p_hold,
        informative=task_informativeness_filter(list(logs_a) + list(logs_b)),
    )


def report_csv(rows: Sequence[TaskComparison]) -> str:
    """Comparison table: columns (a) are convergence points, (b) holdout accuracy."""
    if not rows:
        return "task\n"
    a_name, b_name = rows[0].a.method, rows[0].b.method
    header = (
        f"task,{a_name} (a),{b_name} (a),p-value (a),"
        f"{a_name} (b),{b_name} (b),p-value (b),informative"
    )
    lines = [header]
    for row in rows:
        lines.append(
            f"{row.task},{row.a.mean_convergence:.2f},{row.b.mean_convergence:.2f},"
            f"{row.p_convergence:.3e},{row.a.mean_holdout:.4f},{row.b.mean_holdout:.4f},"
            f"{row.p_holdout:.3e},{str(row.informative).lower()}"
        )
    return "\n".join(lines) + "\n"


def report_markdown(rows: Sequence[TaskComparison]) -> str:
    if not rows:
        return "(no tasks)\n"
    a_name, b_name = rows[0].a.method, rows[0].b.method
    lines = [
        f"| task | {a_name} (a) | {b_name} (a) | p-value (a) "
        f"| {a_name} (b) | {b_name} (b) | p-value (b) |",
        "|---|---|---|---|---|---|---|",
    ]
    for row in rows:
        lines.append(
            f"| {row.task} | {row.a.mean_convergence:.2f} | {row.b.mean_convergence:.2f} "
            f"| {row.p_convergence:.2e} | {row.a.mean_holdout:.2f} "
            f"| {row.b.mean_holdout:.2f} | {row.p_holdout:.2f} |"
        )
    return "\n".join(lines) + "\n"
