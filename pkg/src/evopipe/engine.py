"""Seeded single-run evolution loop.

One `random.Random` stream drives everything stochastic in a run (fold
assignment, the initial population, variation, and selection events), so a
(config, seed) pair replays byte-for-byte. Each generation's newly evaluated
individuals are appended to the run log and inserted into the exploration
trie before parents are selected for the next generation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, OperatorError
from .evaluation import (
    DEFAULT_BUDGET_S,
    DEFAULT_FOLDS,
    FitnessVector,
    balanced_accuracy,
    evaluate_pipeline,
    fit_pipeline,
    stratified_k_fold,
)
from .operators import check_evaluable, default_registry
from .pipeline import (
    DEFAULT_MAX_DEPTH,
    Individual,
    Registry,
    operator_sequence,
    random_pipeline,
    serialize_tree,
)
from .runlog import GenerationRecord, IndividualRecord, RunLog, RunLogWriter
from .selection import (
    METHOD_AUTO_EPS_LEXICASE,
    METHOD_EPS_LEXICASE,
    METHOD_LEXICASE,
    METHOD_NSGA2,
    METHODS,
    STANDARD_OBJECTIVES,
    lexicase_select,
    nsga2_select,
)
from .trie import ExplorationTrie, TrieMetrics
from .variation import VariationConfig, generate_offspring


@dataclass(frozen=True)
class RunConfig:
    """Engine knobs for one evolutionary run."""

    initial_pop_size: int = 80
    pop_size: int = 40
    generations: int = 20
    cross_prob: float = 0.1
    mut_prob: float = 0.9
    max_depth: int = DEFAULT_MAX_DEPTH
    folds: int = DEFAULT_FOLDS
    eval_budget_s: float = DEFAULT_BUDGET_S
    epsilon: float = 0.0  # fixed-epsilon lexicase only
    registry: Registry = field(default_factory=default_registry)

    def __post_init__(self):
        if self.generations < 1:
            raise ConfigurationError("generations must be >= 1")
        if self.pop_size < 2:
            raise ConfigurationError("pop_size must be >= 2")
        if self.initial_pop_size < self.pop_size:
            raise ConfigurationError("initial population must be at least pop_size")
        check_evaluable(self.registry)

    def variation(self) -> VariationConfig:
        return VariationConfig(
            pop_size=self.pop_size, cross_prob=self.cross_prob, mut_prob=self.mut_prob
        )


@dataclass
class RunResult:
    runlog: RunLog
    trie: ExplorationTrie
    trie_metrics: list[TrieMetrics]


_LEXICASE_MODE = {
    METHOD_LEXICASE: "none",
    METHOD_EPS_LEXICASE: "fixed",
    METHOD_AUTO_EPS_LEXICASE: "auto",
}


def select_parents(method: str, individuals, pop_size: int, rng, epsilon: float = 0.0):
    """Dispatch to the configured parent-selection method over raw fitness rows."""
    matrix = np.array(
        [[ind.fitness.accuracy_key, ind.fitness.operator_count] for ind in individuals]
    )
    if method == METHOD_NSGA2:
        chosen = nsga2_select(matrix, pop_size, STANDARD_OBJECTIVES)
    elif method in _LEXICASE_MODE:
        chosen = lexicase_select(
            matrix, pop_size, rng, _LEXICASE_MODE[method],
            epsilon=epsilon, objectives=STANDARD_OBJECTIVES,
        )
    else:
        raise ConfigurationError(f"unknown selection method {method!r} (choose from {METHODS})")
    return [individuals[i] for i in chosen]


def _best_by_training(individuals) -> Individual | None:
    """Best CV accuracy; ties prefer fewer operators, then the lower id."""
    scored = [ind for ind in individuals if not ind.fitness.failed]
    if not scored:
        return None
    return min(
        scored,
        key=lambda ind: (-ind.fitness.cv_accuracy, ind.fitness.operator_count, ind.id),
    )


def run_single(
    train: Dataset,
    holdout: Dataset,
    method: str,
    config: RunConfig,
    seed: int,
    task_name: str = "task",
    out_dir: str | Path | None = None,
    run_index: int | None = None,
) -> RunResult:
    """Execute one seeded run; optionally persist its artifacts incrementally.

    With an output directory, writes run_<i>.log (run log), run_<i>_trie.csv
    (per-generation trie metrics), and run_<i>.dot (final trie) where <i> is
    the run index (the seed when no index is given).
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown selection method {method!r} (choose from {METHODS})")
    rng = random.Random(seed)
    fold_plan = stratified_k_fold(train, config.folds, rng)
    trie = ExplorationTrie()
    metrics_rows: list[TrieMetrics] = []
    cache: dict[str, FitnessVector] = {}
    runlog = RunLog(seed=seed, method=method, task=task_name)

    log_fh = metrics_fh = None
    writer = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"run_{seed if run_index is None else run_index}"
        log_fh = open(out_dir / f"{stem}.log", "w", encoding="utf-8")
        writer = RunLogWriter(
            log_fh,
            seed,
            method,
            task_name,
            meta={
                "initial_pop_size": str(config.initial_pop_size),
                "pop_size": str(config.pop_size),
                "generations": str(config.generations),
            },
        )
        metrics_fh = open(out_dir / f"{stem}_trie.csv", "w", encoding="utf-8")
        metrics_fh.write(TrieMetrics.CSV_HEADER + "\n")

    def evaluate(individual: Individual) -> None:
        key = serialize_tree(individual.tree)
        fitness = cache.get(key)
        if fitness is None:
            fitness = evaluate_pipeline(individual.tree, train, fold_plan, config.eval_budget_s)
            cache[key] = fitness
        individual.set_fitness(fitness)

    def holdout_accuracy(best: Individual | None) -> float | None:
        if best is None:
            return None
        try:
            fitted = fit_pipeline(best.tree, train.features, train.labels)
            return balanced_accuracy(holdout.labels, fitted.predict(holdout.features))
        except (OperatorError, np.linalg.LinAlgError):
            return None

    def log_generation(index: int, individuals: list[Individual]) -> None:
        best = _best_by_training(individuals)
        record = GenerationRecord(
            index=index,
            individuals=[
                IndividualRecord(
                    generation=index,
                    id=ind.id,
                    provenance=ind.provenance,
                    parents=ind.parents,
                    cv_accuracy=ind.fitness.cv_accuracy,
                    operator_count=ind.fitness.operator_count,
                    tree=serialize_tree(ind.tree),
                )
                for ind in individuals
            ],
            best_id=None if best is None else best.id,
            best_holdout=holdout_accuracy(best),
        )
        runlog.generations.append(record)
        for ind in individuals:
            trie.insert(operator_sequence(ind.tree), generation=index)
        metrics_rows.append(trie.metrics(index))
        if writer is not None:
            writer.write_generation(record)
            metrics_fh.write(metrics_rows[-1].csv_row() + "\n")
            metrics_fh.flush()

    try:
        next_id = 0
        population: list[Individual] = []
        for _ in range(config.initial_pop_size):
            ind = Individual(
                random_pipeline(config.registry, rng, config.max_depth), "initial", id=next_id
            )
            next_id += 1
            evaluate(ind)
            population.append(ind)
        log_generation(0, population)

        variation = config.variation()
        for generation in range(1, config.generations + 1):
            offspring = generate_offspring(
                population, variation, config.registry, rng, config.max_depth
            )
            for ind in offspring:
                ind.id = next_id
                next_id += 1
                evaluate(ind)
            log_generation(generation, offspring)
            population = select_parents(
                method, population + offspring, config.pop_size, rng, config.epsilon
            )
    finally:
        if log_fh is not None:
            log_fh.close()
        if metrics_fh is not None:
            metrics_fh.close()

    if out_dir is not None:
        trie.write_dot(out_dir / f"{stem}.dot")
    return RunResult(runlog=runlog, trie=trie, trie_metrics=metrics_rows)
