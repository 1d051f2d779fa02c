"""Binary-classification datasets: synthetic task generation and CSV ingestion.

Synthetic tasks draw i.i.d. standard-Gaussian features and label them with a
generative function thresholded at its empirical median, so classes are
balanced by construction; optional label noise flips each label independently.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, IngestionError

DEFAULT_N_TRAIN = 800
DEFAULT_N_HOLDOUT = 200
DEFAULT_N_FEATURES = 10


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, binary labels, and feature names.

    Both classes must be present and all entries finite. Row counts small
    enough to break k-fold evaluation are rejected there, not here, so tiny
    files still load.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        x, y = self.features, self.labels
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError("features must be n x d with one label per row")
        if len(self.feature_names) != x.shape[1]:
            raise ValueError("feature name count does not match feature columns")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain missing or non-finite entries")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if len(np.unique(y)) < 2:
            raise ValueError("both classes must be present")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names)


# ---------------------------------------------------------------------------
# Synthetic task family
# ---------------------------------------------------------------------------

def _pick_features(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    return rng.choice(d, size=min(k, d), replace=False)


def _gen_linear(x, rng):
    w = rng.normal(size=x.shape[1])
    return x @ w


def _gen_xor(x, rng):
    i, j = _pick_features(rng, x.shape[1], 2)
    return x[:, i] * x[:, j]


def _gen_xor3(x, rng):
    idx = _pick_features(rng, x.shape[1], 3)
    return x[:, idx[0]] * x[:, idx[1]] * x[:, idx[2]]


def _gen_interactions(x, rng):
    idx = _pick_features(rng, x.shape[1], 4)
    a, b, c, d_ = (x[:, k] for k in idx)
    w = rng.uniform(0.6, 1.4)
    return a * b + w * c * d_


def _gen_poly(x, rng):
    idx = _pick_features(rng, x.shape[1], 4)
    a, b, c, d_ = (x[:, k] for k in idx)
    w = rng.uniform(0.5, 1.5, size=3)
    return w[0] * a * b + w[1] * c * c - w[2] * d_


def _gen_nested(x, rng):
    idx = _pick_features(rng, x.shape[1], 3)
    a, b, c = (x[:, k] for k in idx)
    return np.where(a > 0.0, b, -c)


def _gen_ring(x, rng):
    idx = _pick_features(rng, x.shape[1], 2)
    return np.sqrt(x[:, idx[0]] ** 2 + x[:, idx[1]] ** 2)


GENERATIVE_FUNCTIONS = {
    "linear": _gen_linear,
    "xor": _gen_xor,
    "xor3": _gen_xor3,
    "interactions": _gen_interactions,
    "poly": _gen_poly,
    "nested": _gen_nested,
    "ring": _gen_ring,
}


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Recipe for one synthetic binary task."""

    function: str
    seed: int
    n_train: int = DEFAULT_N_TRAIN
    n_holdout: int = DEFAULT_N_HOLDOUT
    n_features: int = DEFAULT_N_FEATURES
    noise: float = 0.0
    feature_names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.function not in GENERATIVE_FUNCTIONS:
            known = ", ".join(sorted(GENERATIVE_FUNCTIONS))
            raise GenerationError(f"unknown generative function {self.function!r} (known: {known})")
        if self.n_train + self.n_holdout <= 0:
            raise GenerationError("n_train + n_holdout must be positive")
        if self.n_features < 1:
            raise GenerationError("need at least one feature")
        if not 0.0 <= self.noise < 0.5:
            raise GenerationError("noise flip rate must lie in [0, 0.5)")

    @property
    def name(self) -> str:
        return f"{self.function}-{self.seed}"


def generate_synthetic(spec: SyntheticTaskSpec) -> tuple[Dataset, Dataset]:
    """Return (train, holdout) datasets for a synthetic task spec."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_train + spec.n_holdout
    x = rng.standard_normal((n, spec.n_features))
    z = GENERATIVE_FUNCTIONS[spec.function](x, rng)
    if np.std(z) == 0.0:
        raise GenerationError(f"generative function {spec.function!r} is constant on this draw")
    y = (z > np.median(z)).astype(np.int64)
    if spec.noise > 0.0:
        flip = rng.random(n) < spec.noise
        y = np.where(flip, 1 - y, y)
    names = tuple(f"f{i}" for i in range(spec.n_features))
    try:
        train = Dataset(x[: spec.n_train], y[: spec.n_train], names)
        holdout = Dataset(x[spec.n_train :], y[spec.n_train :], names)
    except ValueError as exc:
        raise GenerationError(f"degenerate synthetic task {spec.name}: {exc}") from exc
    return train, holdout


# ---------------------------------------------------------------------------
# CSV ingestion and export
# ---------------------------------------------------------------------------

def load_csv(path, label_column: str) -> Dataset:
    """Load a headed CSV of numeric features plus one binary label column."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise IngestionError(f"{path}: file is empty")
    header = rows[0]
    if label_column not in header:
        raise IngestionError(f"{path}: label column {label_column!r} not found in header")
    label_idx = header.index(label_column)
    feature_names = tuple(name for i, name in enumerate(header) if i != label_idx)

    features, labels = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise IngestionError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        values = []
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise IngestionError(
                    f"{path}: row {r}, column {header[i]!r}: non-numeric cell {cell!r}"
                ) from None
        raw = row[label_idx].strip()
        if raw not in ("0", "1"):
            raise IngestionError(f"{path}: row {r}: label {raw!r} is not 0 or 1")
        features.append(values)
        labels.append(int(raw))
    if not features:
        raise IngestionError(f"{path}: no data rows")
    try:
        return Dataset(
            np.array(features, dtype=float), np.array(labels, dtype=np.int64), feature_names
        )
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def save_csv(dataset: Dataset, path, label_column: str = "label") -> None:
    """Write a dataset back to CSV form; floats keep full round-trip precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [label_column])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def train_holdout_split(
    dataset: Dataset, holdout_fraction: float, rng: random.Random
) -> tuple[Dataset, Dataset]:
    """Stratified split; the holdout size is within 1 of n * holdout_fraction."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout fraction must lie in (0, 1)")
    n = dataset.n_rows
    target = round(n * holdout_fraction)

    per_class: dict[int, list[int]] = {}
    for c in (0, 1):
        idx = np.nonzero(dataset.labels == c)[0].tolist()
        rng.shuffle(idx)
        per_class[c] = idx

    # Largest-remainder allocation of the holdout target across classes.
    exact = {c: len(per_class[c]) * holdout_fraction for c in per_class}
    take = {c: int(exact[c]) for c in per_class}
    leftover = target - sum(take.values())
    order = sorted(per_class, key=lambda c: (-(exact[c] - take[c]), c))
    for c in order[: max(leftover, 0)]:
        take[c] += 1

    holdout_rows, train_rows = [], []
    for c, idx in per_class.items():
        if not 0 < take[c] < len(idx):
            raise ValueError(f"class {c} is too small to stratify at this fraction")
        holdout_rows.extend(idx[: take[c]])
        train_rows.extend(idx[take[c] :])
    return dataset.subset(sorted(train_rows)), dataset.subset(sorted(holdout_rows))
