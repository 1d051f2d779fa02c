"""Experiment configuration: a flat key=value text file plus CLI overrides.

Recognized keys (all optional; defaults in parentheses):

  tasks        comma-separated synthetic task tokens `<function>@<seed>`,
               e.g. `xor@7, poly@3` — functions: linear, xor, poly, nested, ring
  csv_tasks    comma-separated `<path>:<label column>` entries
  n_train      rows in each synthetic training set (800)
  n_holdout    rows in each synthetic holdout set (200)
  n_features   synthetic feature count (10)
  noise        synthetic label flip rate in [0, 0.5) (0.05)
  holdout_fraction  holdout share for csv tasks (0.25)
  methods      selection methods to compare (nsga2, auto-eps-lexicase)
  initial_pop_size  generation-0 population (80)
  pop_size     per-generation population (40)
  generations  generations after the initial one (20)
  runs         seeded runs per (task, method) (20)
  base_seed    run i uses base_seed + i (1000)
  cross_prob / mut_prob   variation rates (0.1 / 0.9)
  max_depth    pipeline depth cap (7)
  folds        cross-validation folds (10)
  eval_budget_s  per-pipeline evaluation budget in seconds (5.0)
  epsilon      fixed epsilon for eps-lexicase (0.05)
  registry     path to a JSON operator registry (built-in when empty)
  jobs         parallel worker processes, 0 = all cores (0)
  out          output directory (results)
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .data import (
    DEFAULT_N_FEATURES,
    DEFAULT_N_HOLDOUT,
    DEFAULT_N_TRAIN,
    Dataset,
    SyntheticTaskSpec,
    generate_synthetic,
    load_csv,
    train_holdout_split,
)
from .engine import RunConfig
from .errors import ConfigurationError
from .pipeline import DEFAULT_MAX_DEPTH
from .selection import METHODS


@dataclass(frozen=True)
class CsvTaskSpec:
    path: str
    label_column: str

    @property
    def name(self) -> str:
        return Path(self.path).stem


@dataclass(frozen=True)
class ExperimentConfig:
    tasks: tuple[SyntheticTaskSpec, ...] = ()
    csv_tasks: tuple[CsvTaskSpec, ...] = ()
    methods: tuple[str, ...] = ("nsga2", "auto-eps-lexicase")
    holdout_fraction: float = 0.25
    initial_pop_size: int = 80
    pop_size: int = 40
    generations: int = 20
    runs: int = 20
    base_seed: int = 1000
    cross_prob: float = 0.1
    mut_prob: float = 0.9
    max_depth: int = DEFAULT_MAX_DEPTH
    folds: int = 10
    eval_budget_s: float = 5.0
    epsilon: float = 0.05
    registry_path: str = ""
    jobs: int = 0
    out: str = "results"

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.generations < 1:
            raise ConfigurationError("generations must be >= 1")
        if self.initial_pop_size < self.pop_size:
            raise ConfigurationError("initial_pop_size must be at least pop_size")
        if not self.tasks and not self.csv_tasks:
            raise ConfigurationError("no tasks configured")
        for method in self.methods:
            if method not in METHODS:
                raise ConfigurationError(
                    f"unknown selection method {method!r} (choose from {METHODS})"
                )

    def all_tasks(self) -> tuple:
        return self.tasks + self.csv_tasks

    def run_config(self) -> RunConfig:
        from .pipeline import load_registry
        from .operators import default_registry

        registry = load_registry(self.registry_path) if self.registry_path else default_registry()
        return RunConfig(
            initial_pop_size=self.initial_pop_size,
            pop_size=self.pop_size,
            generations=self.generations,
            cross_prob=self.cross_prob,
            mut_prob=self.mut_prob,
            max_depth=self.max_depth,
            folds=self.folds,
            eval_budget_s=self.eval_budget_s,
            epsilon=self.epsilon,
            registry=registry,
        )


def materialize_task(spec, config: ExperimentConfig) -> tuple[str, Dataset, Dataset]:
    """Produce (name, train, holdout) for a task spec; deterministic per config."""
    if isinstance(spec, SyntheticTaskSpec):
        train, holdout = generate_synthetic(spec)
        return spec.name, train, holdout
    dataset = load_csv(spec.path, spec.label_column)
    train, holdout = train_holdout_split(
        dataset, config.holdout_fraction, random.Random(config.base_seed)
    )
    return spec.name, train, holdout


def _parse_synthetic_token(token: str, defaults: dict) -> SyntheticTaskSpec:
    if "@" not in token:
        raise ConfigurationError(
            f"bad task token {token!r}: expected <function>@<seed>, e.g. xor@7"
        )
    function, _, seed_text = token.partition("@")
    try:
        seed = int(seed_text)
    except ValueError:
        raise ConfigurationError(f"bad task token {token!r}: seed must be an integer") from None
    return SyntheticTaskSpec(function=function.strip(), seed=seed, **defaults)


def _parse_csv_token(token: str) -> CsvTaskSpec:
    path, sep, label = token.rpartition(":")
    if not sep or not path:
        raise ConfigurationError(
            f"bad csv task token {token!r}: expected <path>:<label column>"
        )
    return CsvTaskSpec(path=path.strip(), label_column=label.strip())


_INT_KEYS = {
    "n_train", "n_holdout", "n_features", "initial_pop_size", "pop_size",
    "generations", "runs", "base_seed", "max_depth", "folds", "jobs",
}
_FLOAT_KEYS = {"noise", "holdout_fraction", "cross_prob", "mut_prob", "eval_budget_s", "epsilon"}
_LIST_KEYS = {"tasks", "csv_tasks", "methods"}
_STR_KEYS = {"registry", "out"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the flat key=value format into a raw option dict."""
    options: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _INT_KEYS:
            try:
                options[key] = int(value)
            except ValueError:
                raise ConfigurationError(f"{source}:{lineno}: {key} must be an integer") from None
        elif key in _FLOAT_KEYS:
            try:
                options[key] = float(value)
            except ValueError:
                raise ConfigurationError(f"{source}:{lineno}: {key} must be a number") from None
        elif key in _LIST_KEYS:
            options[key] = tuple(t.strip() for t in value.split(",") if t.strip())
        elif key in _STR_KEYS:
            options[key] = value
        else:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
    return options


def build_config(options: dict) -> ExperimentConfig:
    """Turn raw options (from file and/or CLI) into an ExperimentConfig."""
    opts = dict(options)
    synth_defaults = {
        "n_train": opts.pop("n_train", DEFAULT_N_TRAIN),
        "n_holdout": opts.pop("n_holdout", DEFAULT_N_HOLDOUT),
        "n_features": opts.pop("n_features", DEFAULT_N_FEATURES),
        "noise": opts.pop("noise", 0.05),
    }
    tasks = tuple(
        _parse_synthetic_token(t, synth_defaults) for t in opts.pop("tasks", ())
    )
    csv_tasks = tuple(_parse_csv_token(t) for t in opts.pop("csv_tasks", ()))
    if "registry" in opts:
        opts["registry_path"] = opts.pop("registry")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(opts) - known
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    return ExperimentConfig(tasks=tasks, csv_tasks=csv_tasks, **opts)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    options = parse_config_text(text, source=str(path))
    options.update(overrides or {})
    return build_config(options)
