"""Run logs: the persisted per-generation record of every evaluated individual.

The format is line-delimited and tab-separated with a versioned header, one
individual per line, so logs stay greppable and stream-parseable. Each
generation block ends with a summary line carrying the generation's
best-by-training individual and its holdout accuracy; a file truncated at a
generation boundary therefore still parses, dropping nothing but unfinished
work.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

FORMAT_VERSION = "1"
FAILED_TOKEN = "FAILED"
_FIELDS = ("generation", "id", "provenance", "parents", "cv_accuracy", "operator_count", "tree")


def _format_accuracy(value: float | None) -> str:
    return FAILED_TOKEN if value is None else f"{value:.10f}"


def _parse_accuracy(text: str) -> float | None:
    return None if text == FAILED_TOKEN else float(text)


@dataclass(frozen=True)
class IndividualRecord:
    generation: int
    id: int
    provenance: str
    parents: tuple[int, ...]
    cv_accuracy: float | None
    operator_count: int
    tree: str

    def line(self) -> str:
        parents = ",".join(str(p) for p in self.parents) or "-"
        return "\t".join(
            (
                str(self.generation),
                str(self.id),
                self.provenance,
                parents,
                _format_accuracy(self.cv_accuracy),
                str(self.operator_count),
                self.tree,
            )
        )

    @classmethod
    def from_line(cls, line: str) -> "IndividualRecord":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(_FIELDS):
            raise ValueError(f"malformed individual line: {line!r}")
        parents = () if parts[3] == "-" else tuple(int(p) for p in parts[3].split(","))
        return cls(
            generation=int(parts[0]),
            id=int(parts[1]),
            provenance=parts[2],
            parents=parents,
            cv_accuracy=_parse_accuracy(parts[4]),
            operator_count=int(parts[5]),
            tree=parts[6],
        )


@dataclass
class GenerationRecord:
    index: int
    individuals: list[IndividualRecord]
    best_id: int | None = None
    best_holdout: float | None = None

    def best_cv_accuracy(self) -> float:
        """Best training-CV accuracy in this generation; -inf if all failed."""
        return max(
            (r.cv_accuracy for r in self.individuals if r.cv_accuracy is not None),
            default=float("-inf"),
        )


@dataclass
class RunLog:
    seed: int
    method: str
    task: str
    meta: dict[str, str] = field(default_factory=dict)
    generations: list[GenerationRecord] = field(default_factory=list)

    def records(self):
        for gen in self.generations:
            yield from gen.individuals


class RunLogWriter:
    """Incremental writer; each generation is flushed as one atomic block."""

    def __init__(self, stream: io.TextIOBase, seed: int, method: str, task: str,
                 meta: dict[str, str] | None = None):
        self._stream = stream
        stream.write(f"#runlog\tv{FORMAT_VERSION}\n")
        stream.write(f"#seed\t{seed}\n")
        stream.write(f"#method\t{method}\n")
        stream.write(f"#task\t{task}\n")
        for key in sorted(meta or {}):
            stream.write(f"#meta\t{key}\t{meta[key]}\n")
        stream.write("#fields\t" + "\t".join(_FIELDS) + "\n")
        stream.flush()

    def write_generation(self, generation: GenerationRecord) -> None:
        for record in generation.individuals:
            self._stream.write(record.line() + "\n")
        best = "-" if generation.best_id is None else str(generation.best_id)
        holdout = _format_accuracy(generation.best_holdout)
        self._stream.write(
            f"#gen_summary\t{generation.index}\t{best}\t{holdout}\n"
        )
        self._stream.flush()


def write_runlog(path, runlog: RunLog) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        writer = RunLogWriter(fh, runlog.seed, runlog.method, runlog.task, runlog.meta)
        for gen in runlog.generations:
            writer.write_generation(gen)


def load_runlog(path) -> RunLog:
    """Parse a run log, keeping only generations closed by their summary line."""
    header: dict[str, str] = {}
    meta: dict[str, str] = {}
    complete: list[GenerationRecord] = []
    pending: list[IndividualRecord] = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#runlog\t"):
            raise ValueError(f"{path}: not a run log")
        version = first.rstrip("\n").split("\t")[1]
        if version != f"v{FORMAT_VERSION}":
            raise ValueError(f"{path}: unsupported run log version {version}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#meta\t"):
                _, key, value = line.split("\t", 2)
                meta[key] = value
            elif line.startswith("#gen_summary\t"):
                _, index, best, holdout = line.split("\t")
                complete.append(
                    GenerationRecord(
                        index=int(index),
                        individuals=pending,
                        best_id=None if best == "-" else int(best),
                        best_holdout=_parse_accuracy(holdout),
                    )
                )
                pending = []
            elif line.startswith("#"):
                key, _, value = line[1:].partition("\t")
                header[key] = value
            else:
                pending.append(IndividualRecord.from_line(line))
    if "seed" not in header or "method" not in header or "task" not in header:
        raise ValueError(f"{path}: missing header fields")
    return RunLog(
        seed=int(header["seed"]),
        method=header["method"],
        task=header["task"],
        meta=meta,
        generations=complete,
    )
