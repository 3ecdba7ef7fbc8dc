"""Command-line entry point.

Thread pinning must happen before numpy loads its BLAS backend, so this
module imports nothing heavy at the top level; the worker modules are
imported inside main() after the environment is set.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

THREAD_ENV_VARS = (
    "OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="degfairgt",
        description="Degree-fair graph transformer pretraining and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None,
                       help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master training seed")
        p.add_argument("--threads", type=int, default=1,
                       help="BLAS thread count (DEGFAIRGT_THREADS overrides)")

    common(sub.add_parser("pretrain", help="run self-supervised pretraining"))

    embed = sub.add_parser("embed", help="export embeddings from a checkpoint")
    common(embed)
    embed.add_argument("--checkpoint", default=None,
                       help="checkpoint path (default: <out>/checkpoint.dfgt)")

    ev = sub.add_parser("evaluate", help="probe accuracy, fairness, clustering")
    common(ev)
    ev.add_argument("--checkpoint", default=None,
                    help="checkpoint path (default: <out>/checkpoint.dfgt)")
    ev.add_argument("--embeddings", default=None,
                    help="evaluate a stored embeddings CSV instead")

    common(sub.add_parser("ablate",
                          help="train and evaluate the four augmentation/attention cells"))
    common(sub.add_parser("synth", help="write a synthetic benchmark dataset"))
    return parser


def _resolve_threads(arg_threads: int) -> int:
    env = os.environ.get("DEGFAIRGT_THREADS")
    if env is not None:
        try:
            threads = int(env)
        except ValueError:
            raise ValueError(f"DEGFAIRGT_THREADS must be an integer, got {env!r}")
    else:
        threads = arg_threads
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = _resolve_threads(args.threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for var in THREAD_ENV_VARS:
        os.environ.setdefault(var, str(threads))

    import dataclasses
    from pathlib import Path

    from . import runner
    from .checkpoint import CheckpointError
    from .config import ConfigError, load_config
    from .graph import GraphFormatError
    from .train import TrainingError

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(
                cfg, train=dataclasses.replace(cfg.train, seed=args.seed))
        out = Path(args.out) if args.out else Path(cfg.output_dir)

        if args.command == "pretrain":
            artifact = runner.run_pretrain(cfg, out, threads)
        elif args.command == "embed":
            ckpt = Path(args.checkpoint) if args.checkpoint else None
            artifact = runner.run_embed(cfg, out, threads, checkpoint=ckpt)
        elif args.command == "evaluate":
            ckpt = Path(args.checkpoint) if args.checkpoint else None
            emb = Path(args.embeddings) if args.embeddings else None
            artifact = runner.run_evaluate(cfg, out, threads, checkpoint=ckpt,
                                           embeddings=emb)
        elif args.command == "ablate":
            artifact = runner.run_ablate(cfg, out, threads)
        else:
            artifact = runner.run_synth(cfg, out, threads)
    except (ConfigError, GraphFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(artifact)
    return 0


if __name__ == "__main__":
    sys.exit(main())
