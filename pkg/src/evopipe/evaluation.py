"""Pipeline scoring: stratified k-fold cross-validation of balanced accuracy.

A pipeline is fit fold by fold: transformers fit-then-transform in data-flow
order on the training portion, the root classifier fits last, and the held-out
fold is pushed through the fitted state for prediction. Every failure mode
(numerical trouble, invalid hyperparameter combinations, budget exhaustion)
folds into the FAILED fitness sentinel so a run never aborts mid-generation.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import EvaluationError, OperatorError
from .operators import make_operator
from .pipeline import CLASSIFIER, DataLeaf, PipelineNode, PipelineTree, count_operators

DEFAULT_FOLDS = 10
DEFAULT_BUDGET_S = 5.0


@dataclass(frozen=True)
class FitnessVector:
    """Two objectives: mean CV balanced accuracy (None when FAILED) and size."""

    cv_accuracy: float | None
    operator_count: int

    @property
    def failed(self) -> bool:
        return self.cv_accuracy is None

    @property
    def accuracy_key(self) -> float:
        return float("-inf") if self.cv_accuracy is None else self.cv_accuracy


@dataclass(frozen=True)
class FoldPlan:
    """Row-index partition for k-fold cross-validation."""

    k: int
    folds: tuple[tuple[int, ...], ...]

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.array(self.folds[fold], dtype=np.intp)
        train = np.concatenate(
            [np.array(f, dtype=np.intp) for i, f in enumerate(self.folds) if i != fold]
        )
        return train, test


def stratified_k_fold(dataset: Dataset, k: int, rng: random.Random) -> FoldPlan:
    """Partition rows into k folds with per-fold class counts within 1 of exact.

    The spill of per-class remainders rotates across folds so total fold sizes
    also stay within 1 of each other.
    """
    if k < 2:
        raise EvaluationError(f"k must be >= 2, got {k}")
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in (0, 1):
        idx = np.nonzero(dataset.labels == c)[0].tolist()
        if len(idx) < k:
            raise EvaluationError(f"class {c} has {len(idx)} rows, fewer than k={k}")
        rng.shuffle(idx)
        base, extra = divmod(len(idx), k)
        start = 0
        for f in range(k):
            size = base + (1 if (f - offset) % k < extra else 0)
            folds[f].extend(idx[start : start + size])
            start += size
        offset = (offset + extra) % k
    return FoldPlan(k, tuple(tuple(sorted(f)) for f in folds))


def balanced_accuracy(truth, predictions) -> float:
    """Mean of the two per-class recalls."""
    truth = np.asarray(truth)
    predictions = np.asarray(predictions)
    if truth.shape != predictions.shape:
        raise EvaluationError("truth and predictions differ in length")
    if not np.isin(truth, (0, 1)).all() or not np.isin(predictions, (0, 1)).all():
        raise EvaluationError("labels must be 0 or 1")
    pos = truth == 1
    if not pos.any() or pos.all():
        raise EvaluationError("truth must contain both classes")
    recall_pos = (predictions[pos] == 1).mean()
    recall_neg = (predictions[~pos] == 0).mean()
    return 0.5 * (recall_pos + recall_neg)


class FittedPipeline:
    """A pipeline bound to fitted operator state; predicts from features only."""

    def __init__(self, tree: PipelineTree, classifier, transformers):
        self.tree = tree
        self._classifier = classifier
        self._transformers = transformers  # node id -> fitted transformer

    def _features(self, node: PipelineNode | DataLeaf, x: np.ndarray) -> np.ndarray:
        if isinstance(node, DataLeaf):
            return x
        parts = [self._features(child, x) for child in node.children]
        merged = parts[0] if len(parts) == 1 else np.hstack(parts)
        if node.op.kind == CLASSIFIER:
            return merged
        return self._transformers[id(node)].transform(merged)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self._classifier.predict(self._features(self.tree, x))


def fit_pipeline(tree: PipelineTree, x: np.ndarray, y: np.ndarray) -> FittedPipeline:
    """Fit every operator on training data in data-flow order.

    Raises OperatorError when any operator cannot fit or emits unusable output.
    """
    transformers: dict[int, object] = {}

    def fit_features(node: PipelineNode | DataLeaf) -> np.ndarray:
        if isinstance(node, DataLeaf):
            return x
        parts = [fit_features(child) for child in node.children]
        merged = parts[0] if len(parts) == 1 else np.hstack(parts)
        if node.op.kind == CLASSIFIER:
            return merged
        inst = make_operator(node.op.name, node.params)
        transformers[id(node)] = inst.fit(merged)
        return inst.transform(merged)

    with np.errstate(all="ignore"):
        features = fit_features(tree)
        classifier = make_operator(tree.op.name, tree.params).fit(features, y)
    return FittedPipeline(tree, classifier, transformers)


def evaluate_pipeline(
    tree: PipelineTree,
    dataset: Dataset,
    fold_plan: FoldPlan,
    budget_s: float = DEFAULT_BUDGET_S,
) -> FitnessVector:
    """Score one pipeline; any failure or budget breach yields the FAILED sentinel."""
    n_ops = count_operators(tree)
    started = time.monotonic()
    scores = []
    for fold in range(fold_plan.k):
        train_rows, test_rows = fold_plan.split(fold)
        try:
            with np.errstate(all="ignore"):
                fitted = fit_pipeline(
                    tree, dataset.features[train_rows], dataset.labels[train_rows]
                )
                predictions = fitted.predict(dataset.features[test_rows])
            scores.append(balanced_accuracy(dataset.labels[test_rows], predictions))
        except (OperatorError, EvaluationError, np.linalg.LinAlgError, FloatingPointError):
            return FitnessVector(None, n_ops)
        if time.monotonic() - started > budget_s:
            return FitnessVector(None, n_ops)
    return FitnessVector(float(np.mean(scores)), n_ops)
