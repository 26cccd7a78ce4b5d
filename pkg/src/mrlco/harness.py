"""Experiment orchestration: dataset building, training, evaluation sweeps.

Three experiment kinds mirror the evaluation scenarios: `topology` (a grid
of fat x density DAG sets), `task-count` (datasets of differing n), and
`transmission-rate` (one DAG set per channel rate). Every artifact is a
deterministic function of (config, master seed): substream seeds are derived
from the master seed plus a textual stream name, so worker parallelism never
changes results.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .dag import (
    DagApp,
    GeneratorConfig,
    RankedDag,
    compute_rank,
    embed_dag,
    generate_dag,
    load_dataset,
    save_dataset,
)
from .errors import ConfigError
from .meta import LearningTask, MetaState, adapt, meta_train, pretrain_finetune
from .net import (
    AdamState,
    NetConfig,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .ppo import HyperParams, evaluate_policy
from .sim import SystemParams, evaluate_plan

CSV_HEADER = ["experiment", "dataset", "algorithm", "update_step", "avg_latency_ms", "seed"]

EXPERIMENTS = ("topology", "task-count", "transmission-rate")


def derive_rng(master_seed: int, *stream: object) -> np.random.Generator:
    """Named substream: seed sequence from the master seed plus the UTF-8
    bytes of the stream labels. Deterministic and order-sensitive."""
    entropy = [np.uint64(master_seed)]
    for part in stream:
        entropy.extend(np.frombuffer(str(part).encode("utf-8"), dtype=np.uint8).astype(np.uint64))
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass
class ExperimentConfig:
    experiment: str = "topology"
    seed: int = 0
    out_dir: str = "runs/default"
    # system
    f_ue: float = 1e9
    f_host: float = 4e10
    user_count: int = 4
    rate_mbps: float = 10.0          # shared rate for topology / task-count
    # generator
    n: int = 20
    fat_set: tuple = (0.4, 0.5, 0.6, 0.7, 0.8)
    density_set: tuple = (0.4, 0.5, 0.6, 0.7, 0.8)
    ccr_range: tuple = (0.3, 0.5)
    cycles_range: tuple = (1e7, 1e8)
    data_range: tuple = (5_000.0, 50_000.0)
    pad_width: int = 12
    # datasets
    dags_per_set: int = 100
    topology_train_sets: int = 22
    train_n: tuple = (10, 15, 25, 35, 45, 50)
    test_n: tuple = (20, 30, 40)
    train_rates_mbps: tuple = (4.0, 7.0, 10.0, 13.0, 16.0, 19.0, 22.0)
    test_rates_mbps: tuple = (5.5, 8.5, 11.5)
    # network / training
    hidden: int = 256
    layers: int = 2
    act_embed: int = 16
    meta_iterations: int = 200
    meta_batch_size: int = 10
    pretrain_iterations: int = 200
    adapt_steps: int = 20
    checkpoint_every: int = 50
    optimal_cap: int = 20
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")

    @staticmethod
    def from_file(path, overrides: dict | None = None) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        if overrides:
            doc.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for key in ("fat_set", "density_set", "ccr_range", "cycles_range", "data_range",
                    "train_n", "test_n", "train_rates_mbps", "test_rates_mbps"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return ExperimentConfig(**doc)

    def desk_scale(self) -> "ExperimentConfig":
        """Shrunken preset for CI-sized runs."""
        return ExperimentConfig(**{
            **self.__dict__,
            "n": 10,
            "dags_per_set": 20,
            "fat_set": (0.4, 0.6, 0.8),
            "density_set": (0.4, 0.8),
            "topology_train_sets": 4,
            "train_n": (8, 12),
            "test_n": (10,),
            "train_rates_mbps": (4.0, 7.0, 10.0, 13.0, 16.0),
            "test_rates_mbps": (8.5,),
            "hidden": 64,
            "meta_iterations": 20,
            "meta_batch_size": 5,
            "pretrain_iterations": 20,
            "adapt_steps": 10,
            "checkpoint_every": 10,
            "optimal_cap": 16,
        })

    def sys_params(self, rate_mbps: float | None = None) -> SystemParams:
        rate = (rate_mbps if rate_mbps is not None else self.rate_mbps) * 1e6
        return SystemParams(f_ue=self.f_ue, f_host=self.f_host,
                            user_count=self.user_count, r_ul=rate, r_dl=rate)

    def net_config(self) -> NetConfig:
        return NetConfig(input_dim=4 + 2 * self.pad_width, hidden=self.hidden,
                         layers=self.layers, act_embed=self.act_embed)

    def gen_config(self, n: int, fat: float, density: float, seed: int) -> GeneratorConfig:
        return GeneratorConfig(n=n, fat=fat, density=density, ccr_range=self.ccr_range,
                               cycles_range=self.cycles_range, data_range=self.data_range,
                               pad_width=self.pad_width, seed=seed)

    def dataset_dir(self) -> Path:
        return Path(self.out_dir) / "datasets" / self.experiment


# ---------------------------------------------------------------------------
# Dataset building


def _set_specs(config: ExperimentConfig):
    """(set_id, n, rate_mbps, fat, density) for every dataset cell. fat/density
    None means per-DAG random draws from the configured sets."""
    specs = []
    if config.experiment == "topology":
        for fat in config.fat_set:
            for density in config.density_set:
                specs.append((f"fat{fat}_density{density}", config.n,
                              config.rate_mbps, fat, density))
    elif config.experiment == "task-count":
        for n in config.train_n:
            specs.append((f"train_n{n}", n, config.rate_mbps, None, None))
        for n in config.test_n:
            specs.append((f"test_n{n}", n, config.rate_mbps, None, None))
    else:
        for r in config.train_rates_mbps:
            specs.append((f"train_rate{r}", config.n, r, None, None))
        for r in config.test_rates_mbps:
            specs.append((f"test_rate{r}", config.n, r, None, None))
    return specs


def _train_test_split(config: ExperimentConfig, set_ids: list[str]):
    if config.experiment == "topology":
        rng = derive_rng(config.seed, "topology-split")
        perm = rng.permutation(len(set_ids))
        train = sorted(set_ids[i] for i in perm[: config.topology_train_sets])
        test = sorted(set_ids[i] for i in perm[config.topology_train_sets :])
    else:
        train = sorted(s for s in set_ids if s.startswith("train_"))
        test = sorted(s for s in set_ids if s.startswith("test_"))
    return train, test


def build_datasets(config: ExperimentConfig) -> Path:
    """Write one JSON dataset file per cell plus a manifest with the split."""
    out = config.dataset_dir()
    out.mkdir(parents=True, exist_ok=True)
    specs = _set_specs(config)
    meta = {}
    for set_id, n, rate, fat, density in specs:
        rng = derive_rng(config.seed, "dataset", config.experiment, set_id)
        dags = []
        for _ in range(config.dags_per_set):
            f = fat if fat is not None else float(rng.choice(config.fat_set))
            d = density if density is not None else float(rng.choice(config.density_set))
            dags.append(generate_dag(config.gen_config(n, f, d, config.seed), rng))
        nominal = config.gen_config(n, fat if fat is not None else config.fat_set[0],
                                    density if density is not None else config.density_set[0],
                                    config.seed)
        save_dataset(out / f"{set_id}.json", nominal, dags)
        meta[set_id] = dict(n=n, rate_mbps=rate, fat=fat, density=density)
    train, test = _train_test_split(config, [s[0] for s in specs])
    manifest = dict(experiment=config.experiment, seed=config.seed,
                    sets=meta, train=train, test=test)
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return out


def load_manifest(config: ExperimentConfig) -> dict:
    path = config.dataset_dir() / "manifest.json"
    if not path.exists():
        raise ConfigError(f"datasets not built: {path} missing (run `mrlco generate`)")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def load_task(config: ExperimentConfig, manifest: dict, set_id: str) -> LearningTask:
    gen_config, dags = load_dataset(config.dataset_dir() / f"{set_id}.json")
    rate = manifest["sets"][set_id]["rate_mbps"]
    params = config.sys_params(rate)
    bundled = []
    for dag in dags:
        ranked = compute_rank(dag, params)
        bundled.append((ranked, embed_dag(ranked, gen_config)))
    return LearningTask(identifier=set_id, dags=bundled, sys_params=params)


def make_hyperparams(config: ExperimentConfig) -> HyperParams:
    return HyperParams(**config.hyperparams)


# ---------------------------------------------------------------------------
# Training entry points


def run_train_meta(config: ExperimentConfig, workers: int = 1) -> Path:
    manifest = load_manifest(config)
    tasks = [load_task(config, manifest, s) for s in manifest["train"]]
    cfg = config.net_config()
    hp = make_hyperparams(config)
    theta = init_params(cfg, derive_rng(config.seed, "meta-init"))
    state = MetaState(theta=theta, adam=AdamState(theta),
                      meta_batch_size=config.meta_batch_size)
    rng = derive_rng(config.seed, "meta-train")
    log: list = []
    ckpt_dir = Path(config.out_dir) / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    remaining = config.meta_iterations
    while remaining > 0:
        chunk = min(config.checkpoint_every, remaining)
        state = meta_train(state, cfg, tasks, hp, chunk, rng, workers=workers, log=log)
        remaining -= chunk
        save_checkpoint(ckpt_dir / f"meta_{state.iteration:05d}.npz", state.theta, cfg)
    final = ckpt_dir / "meta_final.npz"
    save_checkpoint(final, state.theta, cfg)
    with open(Path(config.out_dir) / "train_meta_log.json", "w", encoding="utf-8") as f:
        json.dump(log, f, indent=1)
        f.write("\n")
    return final


def run_train_finetune(config: ExperimentConfig) -> Path:
    manifest = load_manifest(config)
    tasks = [load_task(config, manifest, s) for s in manifest["train"]]
    cfg = config.net_config()
    hp = make_hyperparams(config)
    theta = init_params(cfg, derive_rng(config.seed, "finetune-init"))
    theta = pretrain_finetune(theta, cfg, tasks, hp, config.pretrain_iterations,
                              derive_rng(config.seed, "finetune-train"))
    ckpt_dir = Path(config.out_dir) / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    final = ckpt_dir / "finetune_final.npz"
    save_checkpoint(final, theta, cfg)
    return final


# ---------------------------------------------------------------------------
# Evaluation sweeps


def _heuristic_latency(task: LearningTask, algorithm: str, cap: int) -> float | None:
    total = 0.0
    for ranked, _ in task.dags:
        if algorithm == "heft":
            plan = baselines.heft_schedule(ranked, task.sys_params)
        elif algorithm == "greedy":
            plan = baselines.greedy_schedule(ranked, task.sys_params)
        elif algorithm == "optimal":
            if ranked.n > cap:
                return None
            _, lat = baselines.optimal_schedule(ranked, task.sys_params, limit=cap)
            total += lat
            continue
        else:
            raise ConfigError(f"unknown heuristic {algorithm!r}")
        total += evaluate_plan(ranked, plan, task.sys_params)
    return total / len(task.dags)


def _adapt_job(args):
    config, set_id, algorithm, checkpoint = args
    manifest = load_manifest(config)
    task = load_task(config, manifest, set_id)
    cfg = config.net_config()
    hp = make_hyperparams(config)
    steps = config.adapt_steps
    rows = []
    if algorithm in ("heft", "greedy", "optimal"):
        lat = _heuristic_latency(task, algorithm, config.optimal_cap)
        if lat is not None:
            rows = [(step, lat) for step in range(steps + 1)]
    else:
        if algorithm == "random":
            theta = init_params(cfg, derive_rng(config.seed, "random-eval", set_id))
        else:
            theta, _ = load_checkpoint(checkpoint, expect_cfg=cfg)
        rng = derive_rng(config.seed, "adapt", set_id, algorithm)
        rows = adapt(theta, cfg, task, steps, hp, rng)
    return [(config.experiment, set_id, algorithm, step, lat, config.seed)
            for step, lat in rows]


def run_adapt(config: ExperimentConfig, meta_checkpoint, finetune_checkpoint,
              workers: int = 1, algorithms: tuple = ("mrlco", "finetune", "heft", "greedy"),
              ) -> Path:
    """Evaluation sweep over all test sets and algorithms; returns CSV path."""
    manifest = load_manifest(config)
    jobs = []
    for set_id in manifest["test"]:
        for alg in algorithms:
            ckpt = {"mrlco": meta_checkpoint, "finetune": finetune_checkpoint}.get(alg)
            if alg in ("mrlco", "finetune") and ckpt is None:
                raise ConfigError(f"algorithm {alg!r} needs a checkpoint")
            jobs.append((config, set_id, alg, ckpt))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_adapt_job, jobs))
    else:
        results = [_adapt_job(j) for j in jobs]
    out = Path(config.out_dir) / "adapt_results.csv"
    _write_rows(out, [row for rows in results for row in rows])
    return out


def run_baseline(config: ExperimentConfig,
                 algorithms: tuple = ("optimal", "heft", "greedy")) -> Path:
    manifest = load_manifest(config)
    rows = []
    for set_id in manifest["test"]:
        task = load_task(config, manifest, set_id)
        for alg in algorithms:
            lat = _heuristic_latency(task, alg, config.optimal_cap)
            if lat is not None:
                rows.append((config.experiment, set_id, alg, 0, lat, config.seed))
    out = Path(config.out_dir) / "baseline_results.csv"
    _write_rows(out, rows)
    return out


def _write_rows(path: Path, rows) -> None:
    """Atomic CSV write: UTF-8, LF endings, fixed column order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for exp, ds, alg, step, lat, seed in rows:
            writer.writerow([exp, ds, alg, step, f"{lat:.9f}", seed])
    os.replace(tmp, path)
