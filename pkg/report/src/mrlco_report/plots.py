"""Latency-curve figures and Markdown comparison tables."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .data import ReportError, ResultRow, load_results, mean_over_seeds

# Okabe-Ito palette (colorblind-safe), one stable color per algorithm.
PALETTE = ["#0072B2", "#D55E00", "#009E73", "#CC79A7", "#E69F00", "#56B4E9", "#000000"]


@dataclass
class PlotSpec:
    inputs: list
    out_dir: str | Path
    steps: tuple | None = None       # inclusive (lo, hi) step range for curves,
                                     # or explicit step list for tables
    table_steps: tuple = (20, 100)

    def load(self) -> list[ResultRow]:
        return load_results(self.inputs)


def _atomic_save_figure(fig, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    fig.savefig(tmp, format=path.suffix.lstrip("."), dpi=150)
    os.replace(tmp, path)


def _constant_over_steps(series: dict[int, float]) -> bool:
    values = list(series.values())
    return len(values) > 0 and max(values) == min(values)


def plot_curves(spec: PlotSpec) -> list[Path]:
    """One figure per (experiment, dataset): latency vs update step.

    Algorithms whose latency never changes over steps (heuristics) render as
    horizontal reference lines. Writes PNG + SVG per figure, atomically.
    Returns the written paths.
    """
    rows = spec.load()
    means = mean_over_seeds(rows)
    lo, hi = (spec.steps if spec.steps else (None, None))
    if spec.steps is not None and lo > hi:
        raise ReportError(f"empty step range {spec.steps}")

    grouped: dict[tuple, dict[str, dict[int, float]]] = {}
    for (exp, ds, alg, step), lat in means.items():
        if spec.steps is not None and not (lo <= step <= hi):
            continue
        grouped.setdefault((exp, ds), {}).setdefault(alg, {})[step] = lat
    if not grouped:
        raise ReportError("step range selects no rows")

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for (exp, ds), by_alg in sorted(grouped.items()):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for i, alg in enumerate(sorted(by_alg)):
            series = dict(sorted(by_alg[alg].items()))
            color = PALETTE[i % len(PALETTE)]
            if _constant_over_steps(series) and len(series) > 1:
                ax.axhline(next(iter(series.values())), color=color,
                           linestyle="--", linewidth=1.2, label=alg)
            else:
                ax.plot(list(series), list(series.values()), color=color,
                        marker="o", markersize=3, linewidth=1.4, label=alg)
        ax.set_xlabel("update step")
        ax.set_ylabel("avg latency (ms)")
        ax.set_title(f"{exp} / {ds}")
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        stem = f"curves_{exp}_{ds}".replace("/", "-")
        for suffix in (".png", ".svg"):
            path = out_dir / (stem + suffix)
            _atomic_save_figure(fig, path)
            written.append(path)
        plt.close(fig)
    return written


def make_table(spec: PlotSpec) -> Path:
    """Markdown table: rows = datasets, columns = algorithm at chosen steps.

    Heuristic (step-constant) algorithms get a single column; learned
    algorithms get one column per requested step. Cells with no matching
    rows (e.g. optimal capped out of range) read "N/A". A requested step
    present nowhere in the data is an error.
    """
    rows = spec.load()
    means = mean_over_seeds(rows)
    steps = tuple(spec.steps) if spec.steps else tuple(spec.table_steps)
    if not steps:
        raise ReportError("no table steps requested")

    datasets = sorted({(exp, ds) for exp, ds, _, _ in means})
    algorithms = sorted({alg for _, _, alg, _ in means})
    all_steps = {step for _, _, _, step in means}
    missing = [s for s in steps if s not in all_steps]
    if missing:
        raise ReportError(f"requested steps absent from inputs: {missing}")

    by_alg_series: dict[str, dict[tuple, dict[int, float]]] = {}
    for (exp, ds, alg, step), lat in means.items():
        by_alg_series.setdefault(alg, {}).setdefault((exp, ds), {})[step] = lat
    static = {alg: all(_constant_over_steps(s) for s in series.values())
              for alg, series in by_alg_series.items()}

    columns: list[tuple[str, int | None]] = []
    for alg in algorithms:
        if static[alg]:
            columns.append((alg, None))
        else:
            columns.extend((alg, s) for s in steps)

    def label(col):
        alg, step = col
        return alg if step is None else f"{alg} (step {step})"

    def cell(exp, ds, col):
        alg, step = col
        series = by_alg_series.get(alg, {}).get((exp, ds))
        if not series:
            return "N/A"
        if step is None:
            return f"{next(iter(series.values())):.2f}"
        if step not in series:
            return "N/A"
        return f"{series[step]:.2f}"

    lines = ["| dataset | " + " | ".join(label(c) for c in columns) + " |",
             "|" + " --- |" * (len(columns) + 1)]
    for exp, ds in datasets:
        cells = [cell(exp, ds, c) for c in columns]
        lines.append(f"| {ds} | " + " | ".join(cells) + " |")

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "table.md"
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path
