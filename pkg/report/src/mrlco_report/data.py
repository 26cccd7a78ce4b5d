"""CSV loading and validation for mrlco result files.

Expected schema (header row required):
    experiment,dataset,algorithm,update_step,avg_latency_ms,seed
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

HEADER = ["experiment", "dataset", "algorithm", "update_step", "avg_latency_ms", "seed"]


class ReportError(RuntimeError):
    """Bad input: missing file, schema mismatch, or empty selection."""


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    dataset: str
    algorithm: str
    update_step: int
    avg_latency_ms: float
    seed: int


def load_results(paths: list[str | Path]) -> list[ResultRow]:
    """Parse and concatenate result CSVs, validating every row."""
    if not paths:
        raise ReportError("no input CSVs given")
    rows: list[ResultRow] = []
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise ReportError(f"input not found: {path}")
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != HEADER:
                raise ReportError(f"{path}: bad header {header!r}, expected {HEADER!r}")
            for lineno, raw in enumerate(reader, start=2):
                if len(raw) != len(HEADER):
                    raise ReportError(f"{path}:{lineno}: expected {len(HEADER)} fields, "
                                      f"got {len(raw)}: {raw!r}")
                try:
                    rows.append(ResultRow(
                        experiment=raw[0],
                        dataset=raw[1],
                        algorithm=raw[2],
                        update_step=int(raw[3]),
                        avg_latency_ms=float(raw[4]),
                        seed=int(raw[5]),
                    ))
                except ValueError as exc:
                    raise ReportError(f"{path}:{lineno}: {exc}: {raw!r}") from exc
    if not rows:
        raise ReportError("inputs contain no data rows")
    return rows


def mean_over_seeds(rows: list[ResultRow]) -> dict[tuple, float]:
    """(experiment, dataset, algorithm, step) -> latency averaged over seeds."""
    acc: dict[tuple, list[float]] = {}
    for r in rows:
        key = (r.experiment, r.dataset, r.algorithm, r.update_step)
        acc.setdefault(key, []).append(r.avg_latency_ms)
    return {k: sum(v) / len(v) for k, v in acc.items()}
