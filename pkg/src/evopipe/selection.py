"""Parent selection over mixed-direction objectives.

NSGA-II (non-dominated sort, crowding distance, front truncation) and the
lexicase family (plain, fixed-epsilon, and automatic-epsilon via the median
absolute deviation of the current pool).

Minimized objectives are sign-flipped once on entry, so every function body
maximizes uniformly. Functions accept `objectives=None` to mean the matrix is
already max-oriented.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

LEXICASE_MODES = ("none", "fixed", "auto")

# Config keys for the selection method family.
METHOD_NSGA2 = "nsga2"
METHOD_LEXICASE = "lexicase"
METHOD_EPS_LEXICASE = "eps-lexicase"
METHOD_AUTO_EPS_LEXICASE = "auto-eps-lexicase"
METHODS = (METHOD_NSGA2, METHOD_LEXICASE, METHOD_EPS_LEXICASE, METHOD_AUTO_EPS_LEXICASE)


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    direction: str

    def __post_init__(self):
        if self.direction not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"unknown direction {self.direction!r}")


STANDARD_OBJECTIVES = (
    ObjectiveSpec("cv_accuracy", MAXIMIZE),
    ObjectiveSpec("operator_count", MINIMIZE),
)


def orient(matrix, objectives: Sequence[ObjectiveSpec] | None) -> np.ndarray:
    """Return a float copy of the matrix with minimized columns negated."""
    out = np.array(matrix, dtype=float)
    if out.ndim == 1:
        out = out[None, :]
    if objectives is not None:
        if len(objectives) != out.shape[1]:
            raise ValueError("objective count does not match matrix columns")
        for j, obj in enumerate(objectives):
            if obj.direction == MINIMIZE:
                out[:, j] = -out[:, j]
    return out


def mad(values) -> float:
    """Median absolute deviation: median(|x_i - median(x)|)."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("mad of an empty sequence")
    return float(np.median(np.abs(arr - np.median(arr))))


def dominates(a, b, objectives: Sequence[ObjectiveSpec] | None = None) -> bool:
    """True iff a is at least as good on every objective and better on one."""
    ra = orient(np.atleast_1d(a), objectives)[0]
    rb = orient(np.atleast_1d(b), objectives)[0]
    if ra.shape != rb.shape:
        raise ValueError("fitness rows differ in length")
    return bool(np.all(ra >= rb) and np.any(ra > rb))


def non_dominated_sort(
    matrix, objectives: Sequence[ObjectiveSpec] | None = None
) -> list[list[int]]:
    """Partition row indices into Pareto fronts (front 1 first)."""
    m = orient(matrix, objectives)
    n = m.shape[0]
    if n == 0:
        raise ValueError("empty fitness matrix")
    ge = (m[:, None, :] >= m[None, :, :]).all(axis=2)
    gt = (m[:, None, :] > m[None, :, :]).any(axis=2)
    dom = ge & gt  # dom[i, j]: row i dominates row j
    counts = dom.sum(axis=0)
    fronts: list[list[int]] = []
    current = np.nonzero(counts == 0)[0]
    remaining = counts.copy()
    while current.size:
        fronts.append(current.tolist())
        remaining[current] = -1
        released = dom[current].sum(axis=0)
        remaining = remaining - released
        current = np.nonzero(remaining == 0)[0]
    return fronts


def crowding_distance(
    front: Sequence[int], matrix, objectives: Sequence[ObjectiveSpec] | None = None
) -> np.ndarray:
    """Per-row density estimate within one front, aligned with `front` order.

    Boundary rows get +inf; interior rows accumulate the normalized gap between
    their sorted neighbors. Objectives with no finite spread contribute nothing.
    """
    if len(front) == 0:
        raise ValueError("empty front")
    m = orient(matrix, objectives)[np.asarray(front, dtype=np.intp)]
    size = m.shape[0]
    dist = np.zeros(size)
    for j in range(m.shape[1]):
        order = np.argsort(m[:, j], kind="stable")
        dist[order[0]] = dist[order[-1]] = np.inf
        span = m[order[-1], j] - m[order[0], j]
        if size > 2 and np.isfinite(span) and span > 0.0:
            gaps = (m[order[2:], j] - m[order[:-2], j]) / span
            dist[order[1:-1]] += gaps
    return dist


def nsga2_select(
    matrix,
    pop_size: int,
    objectives: Sequence[ObjectiveSpec] | None = None,
) -> list[int]:
    """Select pop_size row indices: whole fronts while they fit, then the
    straddling front by descending crowding distance (ties by original index)."""
    m = orient(matrix, objectives)
    if m.shape[0] < pop_size:
        raise ValueError(f"population {m.shape[0]} is smaller than pop_size {pop_size}")
    selected: list[int] = []
    for front in non_dominated_sort(m):
        if len(selected) + len(front) <= pop_size:
            selected.extend(front)
            if len(selected) == pop_size:
                break
            continue
        dist = crowding_distance(front, m)
        ranked = sorted(range(len(front)), key=lambda i: (-dist[i], front[i]))
        selected.extend(front[i] for i in ranked[: pop_size - len(selected)])
        break
    return selected


def lexicase_select(
    matrix,
    pop_size: int,
    rng: random.Random,
    mode: str = "none",
    epsilon: float = 0.0,
    objectives: Sequence[ObjectiveSpec] | None = None,
) -> list[int]:
    """Run pop_size independent lexicase selection events (with replacement).

    Each event shuffles the objectives, then repeatedly keeps the pool rows
    within epsilon of the pool best on the next objective: epsilon is 0 in
    mode "none", the given value in mode "fixed", and the median absolute
    deviation of the current pool's values in mode "auto".
    """
    if mode not in LEXICASE_MODES:
        raise ValueError(f"unknown epsilon mode {mode!r}")
    m = orient(matrix, objectives)
    n, n_obj = m.shape
    if n == 0:
        raise ValueError("empty fitness matrix")
    order = list(range(n_obj))
    selected: list[int] = []
    for _ in range(pop_size):
        pool = np.arange(n)
        rng.shuffle(order)
        for j in order:
            values = m[pool, j]
            best = values.max()
            if mode == "none":
                eps = 0.0
            elif mode == "fixed":
                eps = epsilon
            else:
                eps = mad(values)
                if not np.isfinite(eps):  # pools holding -inf failure sentinels
                    eps = 0.0
            pool = pool[values >= best - eps]
            if pool.size == 1:
                break
        selected.append(int(pool[rng.randrange(pool.size)]))
    return selected
