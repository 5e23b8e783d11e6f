"""Command-line surface: file-based projection, size estimation, the
two-arm training demo, and algorithm benchmarking.

Exit codes are stable: 0 success, 2 input or parse error, 3 constraint
error, 4 numerical divergence.  All outputs are deterministic for fixed
flags and seed; the CSPN_SEED environment variable overrides the built-in
--seed default of 42.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .grids import ConstraintError, DivergenceError
from .layer import argmax_target, project_heatmaps_with_stats
from .mapio import (append_metrics_line, read_constraints, read_map, save_model,
                    write_constraints, write_map, write_mask_pgm)
from .projection import project_simplex_linear, project_simplex_sort
from .saliency import DEFAULT_TAU, estimate_sizes
from .train import (TrainConfig, baseline_config, evaluate_miou, initial_model,
                    train, validation_scenes)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONSTRAINT = 3
EXIT_NUMERIC = 4


def _default_seed() -> int:
    return int(os.environ.get("CSPN_SEED", 42))


def cmd_project(args) -> int:
    stack = read_map(args.input)
    constraints = read_constraints(args.constraints)
    before = {k: float(stack.channel(k).sum()) for k in stack.class_ids}

    projected, stats = project_heatmaps_with_stats(
        stack, constraints, algorithm=args.algorithm, rng=args.seed)
    mask = argmax_target(projected)

    out = Path(args.output)
    write_map(out, projected)
    write_mask_pgm(out.with_suffix(".pgm"), mask)

    summary = {}
    for k in stack.class_ids:
        result = stats.get(k)
        summary[str(k)] = {
            "sum_before": before[k],
            "sum_after": float(projected.channel(k).sum()),
            "theta": result.theta if result else None,
            "support_size": result.support_size if result else None,
        }
    out.with_suffix(".json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_estimate_sizes(args) -> int:
    saliency = read_map(args.input)
    constraints = estimate_sizes(saliency, args.tau,
                                 saliency.height * saliency.width)
    write_constraints(args.output, constraints)
    return EXIT_OK


def _demo_config(args) -> TrainConfig:
    config = TrainConfig(seed=args.seed, size_source=args.size_source,
                         tau=args.tau, soft_target=args.soft_target,
                         average_loss=not args.loss_sum)
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    if args.lr is not None:
        config = replace(config, lr=args.lr)
    return config


def cmd_train_demo(args) -> int:
    config = _demo_config(args)
    arms = {"projection": config, "baseline": baseline_config(config)}
    finals = {}
    with Path(args.output).open("w") as fh:
        for arm, arm_config in arms.items():
            if arm_config.epochs == 0:
                model = initial_model(arm_config)
                miou = evaluate_miou(model, validation_scenes(arm_config)).mean
                append_metrics_line(fh, {"arm": arm, "epoch": 0, "val_miou": miou})
            else:
                model, history = train(arm_config)
                for entry in history:
                    append_metrics_line(fh, {"arm": arm, "epoch": entry.epoch,
                                             "mean_loss": entry.mean_loss,
                                             "val_miou": entry.val_miou})
                miou = history[-1].val_miou
                if arm == "projection" and args.save_model:
                    save_model(args.save_model, model)
            finals[arm] = miou
            append_metrics_line(fh, {"arm": arm, "final_miou": miou})
    delta = finals["projection"] - finals["baseline"]
    print(f"projection mIoU {finals['projection']:.4f} vs baseline mIoU "
          f"{finals['baseline']:.4f} (delta {delta:+.4f})")
    return EXIT_OK


def cmd_bench(args) -> int:
    lines = ["n,algorithm,median_ns"]
    rng = np.random.default_rng(args.seed)
    for n in args.n:
        values = rng.uniform(0.0, 1.0, size=n)
        total = max(1.0, 0.05 * n)
        sort_ns, linear_ns = [], []
        for trial in range(args.trials):
            t0 = time.perf_counter_ns()
            reference = project_simplex_sort(values, total)
            sort_ns.append(time.perf_counter_ns() - t0)

            t0 = time.perf_counter_ns()
            candidate = project_simplex_linear(values, total, args.seed + trial)
            linear_ns.append(time.perf_counter_ns() - t0)

            gap = float(np.max(np.abs(reference.projected - candidate.projected)))
            if gap > 1e-9:
                raise DivergenceError(
                    f"algorithms disagree at n={n}, trial={trial}: "
                    f"max deviation {gap:.3e}")
        lines.append(f"{n},sort,{int(statistics.median(sort_ns))}")
        lines.append(f"{n},linear,{int(statistics.median(linear_ns))}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cspn",
        description="Size-constrained projection of confidence maps and the "
                    "toy weakly supervised training demo.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="project a map file onto size constraints")
    p.add_argument("--input", required=True, help="input CSPN-MAP file")
    p.add_argument("--constraints", required=True, help="JSON size constraints")
    p.add_argument("--output", required=True,
                   help="output map path; .pgm mask and .json summary are "
                        "written next to it")
    p.add_argument("--algorithm", choices=("sort", "partition"), default="sort")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("estimate-sizes",
                       help="derive size constraints from a saliency map file")
    p.add_argument("--input", required=True, help="saliency CSPN-MAP file")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--output", required=True, help="output constraints JSON")
    p.set_defaults(func=cmd_estimate_sizes)

    p = sub.add_parser("train-demo",
                       help="train the with/without-projection arms and compare")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--size-source", choices=("oracle", "saliency"),
                   default="oracle")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--soft-target", action="store_true")
    p.add_argument("--loss-sum", action="store_true",
                   help="sum the loss over pixels instead of averaging")
    p.add_argument("--output", required=True, help="metrics JSON-lines path")
    p.add_argument("--save-model", default=None,
                   help="optional checkpoint path for the projection arm")
    p.set_defaults(func=cmd_train_demo)

    p = sub.add_parser("bench", help="time both projection algorithms")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConstraintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
