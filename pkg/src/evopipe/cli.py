"""Command-line interface: seeded runs, experiments, and post-hoc analysis."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click

from . import config as config_mod
from .analysis import report_csv, report_markdown
from .data import GENERATIVE_FUNCTIONS, SyntheticTaskSpec, generate_synthetic, save_csv
from .engine import run_single
from .errors import EvoPipeError
from .experiment import analyze_runs, run_experiment, write_reports
from .pipeline import sequence_from_string
from .runlog import load_runlog
from .trie import ExplorationTrie, TrieMetrics

CONFIG_KEYS_HELP = (config_mod.__doc__ or "").partition("Recognized keys")[2]


@click.group()
def main():
    """Evolve ML pipeline trees and compare parent-selection methods."""


def _load_config(config_path, overrides):
    try:
        if config_path:
            return config_mod.load_config(config_path, overrides)
        return config_mod.build_config(overrides)
    except EvoPipeError as exc:
        raise click.UsageError(str(exc)) from exc


def _collect_overrides(**kwargs) -> dict:
    return {key: value for key, value in kwargs.items() if value is not None}


@main.command(help="Execute one seeded run.\n\nConfig keys:" + CONFIG_KEYS_HELP)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Flat key=value config file.")
@click.option("--task", default=None, help="Synthetic task token <function>@<seed>.")
@click.option("--csv", "csv_task", default=None, help="CSV task <path>:<label column>.")
@click.option("--method", default=None, help="Selection method for this run.")
@click.option("--seed", type=int, default=None, help="Run seed (default: base_seed).")
@click.option("--out", default=None, help="Output directory.")
def run(config_path, task, csv_task, method, seed, out):
    overrides = _collect_overrides(out=out)
    if task:
        overrides["tasks"] = (task,)
        overrides.setdefault("csv_tasks", ())
    if csv_task:
        overrides["csv_tasks"] = (csv_task,)
        overrides.setdefault("tasks", ())
    cfg = _load_config(config_path, overrides)
    method = method or cfg.methods[0]
    seed = cfg.base_seed if seed is None else seed
    spec = cfg.all_tasks()[0]
    try:
        task_name, train, holdout = config_mod.materialize_task(spec, cfg)
        out_dir = Path(cfg.out) / task_name / method
        result = run_single(
            train, holdout, method, cfg.run_config(), seed,
            task_name=task_name, out_dir=out_dir,
        )
    except EvoPipeError as exc:
        raise click.ClickException(str(exc)) from exc
    best = max(
        (g.best_cv_accuracy() for g in result.runlog.generations), default=float("nan")
    )
    click.echo(f"run complete: {len(result.runlog.generations)} generations, "
               f"best CV accuracy {best:.4f}, artifacts in {out_dir}")


@main.command(help="Run the full multi-run comparison.\n\nConfig keys:" + CONFIG_KEYS_HELP)
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", default=None, help="Output directory (overrides config).")
@click.option("--jobs", type=int, default=None, help="Worker processes; 0 = all cores.")
@click.option("--runs", type=int, default=None, help="Runs per (task, method).")
@click.option("--plots", is_flag=True, help="Also render SVG line charts.")
def experiment(config_path, out, jobs, runs, plots):
    overrides = _collect_overrides(out=out, jobs=jobs, runs=runs)
    cfg = _load_config(config_path, overrides)
    started = time.monotonic()
    try:
        rows = run_experiment(cfg, echo=lambda msg: click.echo(msg, err=True))
    except EvoPipeError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(report_markdown(rows), nl=False)
    if plots:
        from .plots import render_all

        for path in render_all(cfg.out):
            click.echo(f"wrote {path}", err=True)
    click.echo(f"experiment finished in {time.monotonic() - started:.1f}s, "
               f"reports under {cfg.out}", err=True)


@main.command()
@click.option("--runs", "runs_dir", type=click.Path(exists=True), required=True,
              help="Experiment output directory holding <task>/<method>/run_*.log.")
@click.option("--method-a", required=True)
@click.option("--method-b", required=True)
@click.option("--out", default=None, help="Also write report.csv/report.md here.")
def analyze(runs_dir, method_a, method_b, out):
    """Recompute the comparison table from persisted run logs."""
    try:
        rows = analyze_runs(runs_dir, method_a, method_b)
    except EvoPipeError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(report_csv(rows), nl=False)
    click.echo(report_markdown(rows), nl=False, err=True)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_reports(out, rows)


@main.command()
@click.option("--runlog", "runlog_path", type=click.Path(exists=True), required=True)
@click.option("--dot", "dot_path", default=None, help="Write the final trie as DOT.")
@click.option("--metrics", "metrics_path", default=None,
              help="Write per-generation trie metrics CSV.")
def trie(runlog_path, dot_path, metrics_path):
    """Rebuild the exploration trie from a run log."""
    try:
        log = load_runlog(runlog_path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    built = ExplorationTrie()
    rows = []
    for gen in log.generations:
        for record in gen.individuals:
            built.insert(sequence_from_string(record.tree), generation=gen.index)
        rows.append(built.metrics(gen.index))
    if dot_path:
        built.write_dot(dot_path)
        click.echo(f"wrote {dot_path}", err=True)
    if metrics_path:
        with open(metrics_path, "w", encoding="utf-8") as fh:
            fh.write(TrieMetrics.CSV_HEADER + "\n")
            for row in rows:
                fh.write(row.csv_row() + "\n")
        click.echo(f"wrote {metrics_path}", err=True)
    if not dot_path and not metrics_path:
        click.echo(TrieMetrics.CSV_HEADER)
        for row in rows:
            click.echo(row.csv_row())


@main.command("gen-data")
@click.option("--function", "function_name", required=True,
              type=click.Choice(sorted(GENERATIVE_FUNCTIONS)))
@click.option("--seed", type=int, required=True)
@click.option("--n-train", type=int, default=800, show_default=True)
@click.option("--n-holdout", type=int, default=200, show_default=True)
@click.option("--n-features", type=int, default=10, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(), default=".", show_default=True)
def gen_data(function_name, seed, n_train, n_holdout, n_features, noise, out):
    """Emit one synthetic task as train/holdout CSV files."""
    spec = SyntheticTaskSpec(
        function=function_name, seed=seed, n_train=n_train,
        n_holdout=n_holdout, n_features=n_features, noise=noise,
    )
    try:
        train, holdout = generate_synthetic(spec)
    except EvoPipeError as exc:
        raise click.ClickException(str(exc)) from exc
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / f"{spec.name}_train.csv"
    holdout_path = out_dir / f"{spec.name}_holdout.csv"
    save_csv(train, train_path)
    save_csv(holdout, holdout_path)
    click.echo(f"wrote {train_path} and {holdout_path}")


if __name__ == "__main__":
    sys.exit(main())
