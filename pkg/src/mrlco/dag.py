"""DAG application model: synthetic generator, rank ordering, task embeddings.

A mobile application is a DAG of tasks. Each task carries a compute/data
profile; edges are precedence constraints (a child may only start once all
parents finished). The generator builds layered random DAGs controlled by
(n, fat, density, ccr); tasks are ordered by a recursive "offload path"
rank and converted into fixed-width embedding vectors for the policy net.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConfigError

# Reference UE speed (cycles/s) and rate (bits/s) used only to turn a ccr
# draw into transfer byte counts; actual system rates live in SystemParams.
CCR_REF_CYCLES_PER_S = 1e9
CCR_REF_BITS_PER_S = 1e7


@dataclass(frozen=True)
class TaskProfile:
    """Per-task resource demand: CPU cycles and transfer sizes in bytes."""

    cycles: float
    data_send: float
    data_recv: float

    def __post_init__(self):
        if self.cycles <= 0 or self.data_send <= 0 or self.data_recv <= 0:
            raise ConfigError(f"task profile fields must be positive: {self}")


@dataclass(frozen=True)
class DagApp:
    """A task DAG: ordered task profiles plus (parent, child) index edges."""

    tasks: tuple[TaskProfile, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.tasks)
        if n == 0:
            raise ConfigError("a DAG needs at least one task")
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise ConfigError(f"edge ({u}, {v}) out of range for n={n}")
        if self.topological_order() is None:
            raise ConfigError("edge relation contains a cycle")

    @property
    def n(self) -> int:
        return len(self.tasks)

    def parents(self, i: int) -> list[int]:
        return [u for u, v in self.edges if v == i]

    def children(self, i: int) -> list[int]:
        return [v for u, v in self.edges if u == i]

    @property
    def exit_set(self) -> set[int]:
        has_child = {u for u, _ in self.edges}
        return {i for i in range(self.n) if i not in has_child}

    def topological_order(self) -> list[int] | None:
        """Kahn pass; None if the edge relation is cyclic."""
        indeg = [0] * self.n
        for _, v in self.edges:
            indeg[v] += 1
        queue = [i for i in range(self.n) if indeg[i] == 0]
        out = []
        while queue:
            i = queue.pop(0)
            out.append(i)
            for j in self.children(i):
                indeg[j] -= 1
                if indeg[j] == 0:
                    queue.append(j)
        return out if len(out) == self.n else None


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the layered random-DAG generator.

    fat controls width vs height (larger -> wider, shallower), density the
    edge probability between consecutive levels, ccr_range the per-task
    communication/computation ratio. pad_width is the max number of
    parent/child slots in an embedding.
    """

    n: int
    fat: float = 0.6
    density: float = 0.6
    ccr_range: tuple[float, float] = (0.3, 0.5)
    cycles_range: tuple[float, float] = (1e7, 1e8)
    data_range: tuple[float, float] = (5_000.0, 50_000.0)
    pad_width: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not (0.0 < self.fat <= 1.0) or not (0.0 < self.density <= 1.0):
            raise ConfigError("fat and density must be in (0, 1]")
        for lo, hi in (self.ccr_range, self.cycles_range, self.data_range):
            if lo <= 0 or hi < lo:
                raise ConfigError("ranges must be nonempty with positive lower bounds")
        if self.pad_width < 1:
            raise ConfigError("pad_width must be >= 1")


@dataclass(frozen=True)
class RankedDag:
    """A DAG together with per-task rank (ms) and the descending-rank order."""

    dag: DagApp
    rank: np.ndarray
    order: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.dag.n

    def rank_index(self) -> dict[int, int]:
        """Original task index -> position in rank order."""
        return {t: i for i, t in enumerate(self.order)}


def generate_dag(config: GeneratorConfig, rng: np.random.Generator | None = None) -> DagApp:
    """Sample one DAG from the layered generator.

    Levels: L = max(1, round(sqrt(n) / fat)) capped at n; tasks spread
    near-uniformly over levels. Every task on level l > 0 draws parents from
    level l-1 independently with probability `density` (at least one parent
    forced); parent/child degrees are capped at pad_width.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n, p = config.n, config.pad_width

    levels = max(1, round(np.sqrt(n) / config.fat))
    levels = min(levels, n)
    # Near-uniform split of n tasks over `levels` levels, each nonempty.
    base, extra = divmod(n, levels)
    sizes = [base + (1 if l < extra else 0) for l in range(levels)]
    level_of = []
    for l, s in enumerate(sizes):
        level_of.extend([l] * s)

    starts = np.cumsum([0] + sizes)
    edges: list[tuple[int, int]] = []
    child_count = [0] * n
    for l in range(1, levels):
        prev = list(range(starts[l - 1], starts[l]))
        for t in range(starts[l], starts[l + 1]):
            open_prev = [q for q in prev if child_count[q] < p]
            if not open_prev:
                raise CapacityError(
                    f"all level-{l - 1} tasks already have {p} children"
                )
            mask = rng.random(len(open_prev)) < config.density
            parents = [q for q, m in zip(open_prev, mask) if m]
            if not parents:
                parents = [open_prev[rng.integers(len(open_prev))]]
            if len(parents) > p:
                keep = rng.choice(len(parents), size=p, replace=False)
                parents = [parents[k] for k in sorted(keep)]
            for q in parents:
                edges.append((q, t))
                child_count[q] += 1

    tasks = []
    for _ in range(n):
        cycles = rng.uniform(*config.cycles_range)
        ccr = rng.uniform(*config.ccr_range)
        # Total transfer bytes so that comm time / compute time = ccr at the
        # reference UE speed and channel rate, split evenly send/recv.
        total_bytes = ccr * (cycles / CCR_REF_CYCLES_PER_S) * CCR_REF_BITS_PER_S / 8.0
        half = float(np.clip(total_bytes / 2.0, *config.data_range))
        tasks.append(TaskProfile(cycles=cycles, data_send=half, data_recv=half))

    return DagApp(tasks=tuple(tasks), edges=tuple(edges))


def compute_rank(dag: DagApp, params) -> RankedDag:
    """Rank each task by its offload-path latency plus the max child rank.

    rank(t) = T_o(t) for exit tasks, else T_o(t) + max over children of
    rank(child), with T_o = uplink + host + downlink latency. Ordering is
    by descending rank, ties broken by ascending original index; since
    T_o > 0 the order is always topological.
    """
    from .sim import task_latencies  # local import to avoid a module cycle

    n = dag.n
    t_o = np.array(
        [task_latencies(t, params).t_offload_total for t in dag.tasks]
    )
    rank = np.zeros(n)
    for i in reversed(dag.topological_order()):
        kids = dag.children(i)
        rank[i] = t_o[i] + (max(rank[j] for j in kids) if kids else 0.0)
    order = tuple(sorted(range(n), key=lambda i: (-rank[i], i)))
    return RankedDag(dag=dag, rank=rank, order=order)


def embed_dag(ranked: RankedDag, config: GeneratorConfig) -> np.ndarray:
    """Fixed-width embedding matrix, one row per task in rank order.

    Row layout: [task index / n, cycles, data_send, data_recv (normalized by
    the generator range maxima), p parent slots, p child slots]; neighbor
    slots hold rank-order indices of immediate neighbors, padded with -1.
    """
    dag, p, n = ranked.dag, config.pad_width, ranked.n
    pos = ranked.rank_index()
    out = np.full((n, 4 + 2 * p), -1.0)
    for i, t in enumerate(ranked.order):
        prof = dag.tasks[t]
        parents = sorted(pos[q] for q in dag.parents(t))
        children = sorted(pos[q] for q in dag.children(t))
        if len(parents) > p or len(children) > p:
            raise CapacityError(
                f"task {t} has {len(parents)} parents / {len(children)} children, pad_width={p}"
            )
        out[i, 0] = i / n
        out[i, 1] = prof.cycles / config.cycles_range[1]
        out[i, 2] = prof.data_send / config.data_range[1]
        out[i, 3] = prof.data_recv / config.data_range[1]
        out[i, 4 : 4 + len(parents)] = parents
        out[i, 4 + p : 4 + p + len(children)] = children
    return out


# ---------------------------------------------------------------------------
# Dataset persistence: JSON with the explicit task/edge lists of every DAG so
# datasets are replayable anywhere.

def dataset_to_dict(config: GeneratorConfig, dags: list[DagApp]) -> dict:
    return {
        "format": "mrlco-dataset-v1",
        "config": {
            "n": config.n,
            "fat": config.fat,
            "density": config.density,
            "ccr_range": list(config.ccr_range),
            "cycles_range": list(config.cycles_range),
            "data_range": list(config.data_range),
            "pad_width": config.pad_width,
            "seed": config.seed,
        },
        "dags": [
            {
                "tasks": [[t.cycles, t.data_send, t.data_recv] for t in d.tasks],
                "edges": [list(e) for e in d.edges],
            }
            for d in dags
        ],
    }


def dataset_from_dict(doc: dict) -> tuple[GeneratorConfig, list[DagApp]]:
    if doc.get("format") != "mrlco-dataset-v1":
        raise ConfigError(f"unknown dataset format: {doc.get('format')!r}")
    c = doc["config"]
    config = GeneratorConfig(
        n=c["n"],
        fat=c["fat"],
        density=c["density"],
        ccr_range=tuple(c["ccr_range"]),
        cycles_range=tuple(c["cycles_range"]),
        data_range=tuple(c["data_range"]),
        pad_width=c["pad_width"],
        seed=c["seed"],
    )
    dags = [
        DagApp(
            tasks=tuple(TaskProfile(*row) for row in d["tasks"]),
            edges=tuple((int(u), int(v)) for u, v in d["edges"]),
        )
        for d in doc["dags"]
    ]
    return config, dags


def save_dataset(path, config: GeneratorConfig, dags: list[DagApp]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(dataset_to_dict(config, dags), f, indent=1)
        f.write("\n")


def load_dataset(path) -> tuple[GeneratorConfig, list[DagApp]]:
    with open(path, encoding="utf-8") as f:
        return dataset_from_dict(json.load(f))


def generate_dataset(config: GeneratorConfig, count: int,
                     rng: np.random.Generator | None = None) -> list[DagApp]:
    """`count` independent draws from one generator configuration."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return [generate_dag(config, rng) for _ in range(count)]
