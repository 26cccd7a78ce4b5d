"""Command-line entry point.

    mrlco generate|train-meta|train-finetune|adapt|baseline \
        --config <file> [--seed N] [--desk-scale] [--out <dir>]

Worker count for parallel sections comes from the MRLCO_WORKERS environment
variable (default 1); results are independent of it.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ConfigError, ProtocolError
from .harness import (
    ExperimentConfig,
    build_datasets,
    run_adapt,
    run_baseline,
    run_train_finetune,
    run_train_meta,
)


def _workers() -> int:
    return max(1, int(os.environ.get("MRLCO_WORKERS", "1")))


def _load_config(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "out_dir": args.out}
    config = ExperimentConfig.from_file(args.config, overrides)
    if args.desk_scale:
        config = config.desk_scale()
    return config


def _add_common(sub):
    sub.add_argument("--config", required=True, help="experiment config JSON")
    sub.add_argument("--seed", type=int, default=None, help="override master seed")
    sub.add_argument("--out", default=None, help="override output directory")
    sub.add_argument("--desk-scale", action="store_true",
                     help="shrink grids, dataset sizes, and iteration counts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrlco",
                                     description="Meta-RL computation offloading experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "train-meta", "train-finetune", "adapt", "baseline"):
        sub = subs.add_parser(name)
        _add_common(sub)
        if name == "adapt":
            sub.add_argument("--meta-checkpoint", default=None)
            sub.add_argument("--finetune-checkpoint", default=None)
            sub.add_argument("--algorithms", default="mrlco,finetune,heft,greedy")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "generate":
            out = build_datasets(config)
            print(f"datasets written to {out}")
        elif args.command == "train-meta":
            ckpt = run_train_meta(config, workers=_workers())
            print(f"meta checkpoint: {ckpt}")
        elif args.command == "train-finetune":
            ckpt = run_train_finetune(config)
            print(f"finetune checkpoint: {ckpt}")
        elif args.command == "adapt":
            ckpt_dir = Path(config.out_dir) / "checkpoints"
            meta_ckpt = args.meta_checkpoint or str(ckpt_dir / "meta_final.npz")
            ft_ckpt = args.finetune_checkpoint or str(ckpt_dir / "finetune_final.npz")
            algorithms = tuple(a for a in args.algorithms.split(",") if a)
            out = run_adapt(config, meta_ckpt, ft_ckpt, workers=_workers(),
                            algorithms=algorithms)
            print(f"results: {out}")
        elif args.command == "baseline":
            out = run_baseline(config)
            print(f"results: {out}")
    except (ConfigError, ProtocolError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
