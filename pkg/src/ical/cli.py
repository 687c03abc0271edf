"""Command line interface.

Subcommands: ``run`` (active-learning experiments from a JSON config),
``dhsic`` (dependence between points of saved prediction tensors),
``example1`` (closed-form constants of the duplicate-pool model), and
``report`` (aggregate saved runs into one CSV).

Exit codes: 0 on success, 2 for configuration or argument problems, 3
for data problems found while running (malformed tensor files,
inconsistent evidence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import tasks
from .acquisition import POLICIES, AcquisitionConfig
from .errors import (
    ConfigError,
    InconsistentEvidenceError,
    InvalidInputError,
    TensorFormatError,
)
from .harness import (
    ExperimentConfig,
    run_experiment,
    write_report_csv,
    write_results_csv,
    write_summary_json,
)
from .kernels import KernelSpec, kernel_matrix
from .dhsic import dhsic
from .models import TrainingParams, example1_stats, load_predictions

TASKS = ("example1", "sparse_variant", "blobs", "csv", "tensor")

_COMMON_KEYS = {
    "task", "backend", "policy", "batch_size", "n_rounds", "minibatch",
    "n_samples", "r", "beta", "kernel_scales", "rng_seed",
}
_TASK_KEYS = {
    "example1": {"n_points"},
    "sparse_variant": {"n_points", "n_hypotheses", "n_classes", "n_pool", "n_test"},
    "blobs": {
        "n_points", "n_classes", "blob_std", "n_members", "learning_rate",
        "epochs", "bootstrap_fraction", "n_initial_per_class", "n_test",
    },
    "csv": {
        "dataset", "n_members", "learning_rate", "epochs",
        "bootstrap_fraction", "n_initial_per_class", "n_test",
    },
    "tensor": {"predictions", "labels", "n_test"},
}


def _acquisition_from(cfg: dict, seed: int) -> AcquisitionConfig:
    scales = cfg.get("kernel_scales")
    kernel = KernelSpec(tuple(float(s) for s in scales)) if scales else KernelSpec()
    return AcquisitionConfig(
        policy=cfg.get("policy", "ical"),
        batch_size=int(cfg.get("batch_size", 10)),
        minibatch=int(cfg.get("minibatch", 1)),
        n_samples=int(cfg.get("n_samples", 64)),
        r=int(cfg.get("r", 200)),
        beta=float(cfg.get("beta", 10.0)),
        kernel=kernel,
        rng_seed=seed,
    )


def experiment_from_dict(cfg: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Build a runnable experiment from flat JSON-style keys."""
    if "task" not in cfg:
        raise ConfigError("config must name a task")
    task = cfg["task"]
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}, expected one of {TASKS}")
    allowed = _COMMON_KEYS | _TASK_KEYS[task]
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for task {task!r}: {sorted(unknown)}")
    seed = int(cfg.get("rng_seed", 0)) if seed_override is None else int(seed_override)
    acq = _acquisition_from(cfg, seed)
    n_rounds = int(cfg.get("n_rounds", 10))

    if task in ("example1", "sparse_variant"):
        backend = cfg.get("backend", "discrete")
        if backend != "discrete":
            raise ConfigError(f"task {task!r} runs on the discrete backend")
        if task == "example1":
            model, _, labels = tasks.example1_task(int(cfg.get("n_points", 50)), seed)
            initial, pool, test = tasks.plain_split(model.n_points, model.n_points, 0)
        else:
            model, _, labels = tasks.sparse_variant_task(
                int(cfg.get("n_points", 250)),
                int(cfg.get("n_hypotheses", 64)),
                int(cfg.get("n_classes", 4)),
                seed,
            )
            n_test = int(cfg.get("n_test", 50))
            n_pool = int(cfg.get("n_pool", model.n_points - n_test))
            initial, pool, test = tasks.plain_split(model.n_points, n_pool, n_test)
        return ExperimentConfig(
            backend="discrete", labels=labels, initial_indices=initial,
            pool_indices=pool, test_indices=test, acquisition=acq,
            n_rounds=n_rounds, rng_seed=seed, model=model,
        )

    if task in ("blobs", "csv"):
        if cfg.get("backend", "ensemble") != "ensemble":
            raise ConfigError(f"task {task!r} runs on the ensemble backend")
        if task == "blobs":
            features, labels = tasks.gaussian_blobs(
                int(cfg.get("n_points", 600)),
                int(cfg.get("n_classes", 4)),
                float(cfg.get("blob_std", 1.0)),
                seed,
            )
        else:
            if "dataset" not in cfg:
                raise ConfigError("csv task requires a 'dataset' path")
            features, labels = tasks.load_dataset_csv(cfg["dataset"])
        initial, pool, test = tasks.stratified_split(
            labels,
            int(cfg.get("n_initial_per_class", 2)),
            int(cfg.get("n_test", 100)),
            seed,
        )
        params = TrainingParams(
            learning_rate=float(cfg.get("learning_rate", 0.5)),
            epochs=int(cfg.get("epochs", 200)),
            bootstrap_fraction=float(cfg.get("bootstrap_fraction", 1.0)),
        )
        return ExperimentConfig(
            backend="ensemble", labels=labels, initial_indices=initial,
            pool_indices=pool, test_indices=test, acquisition=acq,
            n_rounds=n_rounds, rng_seed=seed, features=features,
            n_members=int(cfg.get("n_members", 20)), training=params,
        )

    # task == "tensor"
    if cfg.get("backend", "external") != "external":
        raise ConfigError("tensor task runs on the external backend")
    if "predictions" not in cfg or "labels" not in cfg:
        raise ConfigError("tensor task requires 'predictions' and 'labels' paths")
    preds = load_predictions(cfg["predictions"])
    labels = np.loadtxt(cfg["labels"], dtype=int, ndmin=1)
    if labels.shape[0] != preds.shape[0]:
        raise ConfigError("labels file length does not match the tensor")
    n_test = int(cfg.get("n_test", 0))
    initial, pool, test = tasks.plain_split(
        preds.shape[0], preds.shape[0] - n_test, n_test
    )
    return ExperimentConfig(
        backend="external", labels=labels, initial_indices=initial,
        pool_indices=pool, test_indices=test, acquisition=acq,
        n_rounds=n_rounds, rng_seed=seed, predictions=preds,
    )


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise InvalidInputError(f"could not parse {what} from {text!r}") from None


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object of flat keys")
    if args.seeds is not None:
        seeds = _parse_int_list(args.seeds, "--seeds")
        if not seeds:
            raise ConfigError("--seeds list is empty")
    else:
        seeds = [args.seed] if args.seed is not None else [None]
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    for seed in seeds:
        exp = experiment_from_dict(cfg, seed_override=seed)
        if args.no_timing:
            exp.record_timing = False
        result = run_experiment(exp)
        out_dir = out_root if len(seeds) == 1 else out_root / f"seed_{exp.rng_seed}"
        out_dir.mkdir(parents=True, exist_ok=True)
        write_results_csv(out_dir / "results.csv", result, exp.n_classes)
        write_summary_json(out_dir / "summary.json", exp, result)
        final = result.records[-1]
        acc = "-" if final.accuracy is None else f"{final.accuracy:.4f}"
        nll = "-" if final.nll is None else f"{final.nll:.4f}"
        print(
            f"seed={exp.rng_seed} rounds={exp.n_rounds} final: accuracy={acc} "
            f"nll={nll} pool_entropy={final.pool_entropy:.4f}"
        )
    return 0


def _cmd_dhsic(args) -> int:
    scales = (
        KernelSpec(tuple(float(s) for s in args.scales.split(",")))
        if args.scales
        else KernelSpec()
    )
    points = _parse_int_list(args.points, "--points") if args.points else None
    kernels = []
    for path in args.tensors:
        preds = load_predictions(path)
        idx = points if points is not None else range(preds.shape[0])
        for p in idx:
            if not 0 <= p < preds.shape[0]:
                raise InvalidInputError(
                    f"point index {p} out of range for {path} "
                    f"({preds.shape[0]} points)"
                )
            kernels.append(kernel_matrix(preds[p], scales))
    if len(kernels) < 2:
        raise InvalidInputError("need at least two point kernels for dhsic")
    stat = dhsic(kernels)
    if stat.degenerate:
        print(
            f"warning: m={stat.n_samples} < 2*d={2 * stat.n_variables}; "
            "statistic is degenerate and reported as 0",
            file=sys.stderr,
        )
    print(f"{stat.value:.12f}")
    return 0


def _cmd_example1(args) -> int:
    stats = example1_stats(args.n_points)
    print(f"mi_x1={stats.mi_x1:.6f}")
    print(f"mi_clone={stats.mi_clone:.6f}")
    print(f"clone_entropy_after_x1={stats.clone_entropy_after_x1:.6f}")
    print(f"clone_entropy_after_clone={stats.clone_entropy_after_clone:.6f}")
    return 0


def _cmd_report(args) -> int:
    write_report_csv(args.out, args.results)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ical",
        description="Batch-mode active learning via kernel dependence maximization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="flat JSON config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument(
        "--seeds", default=None,
        help="comma-separated seed list; writes one subdirectory per seed",
    )
    p_run.add_argument(
        "--no-timing", action="store_true",
        help="omit per-round batch construction timings from the records",
    )
    p_run.set_defaults(func=_cmd_run)

    p_dh = sub.add_parser(
        "dhsic", help="dependence across selected points of saved prediction tensors"
    )
    p_dh.add_argument("--tensors", nargs="+", required=True, help="tensor file paths")
    p_dh.add_argument(
        "--points", default=None,
        help="comma-separated point indices (default: every point in each file)",
    )
    p_dh.add_argument(
        "--scales", default=None,
        help="comma-separated kernel mixture exponents (default 0.2,0.5,1,2,5)",
    )
    p_dh.set_defaults(func=_cmd_dhsic)

    p_ex = sub.add_parser(
        "example1", help="closed-form constants of the duplicate-pool model"
    )
    p_ex.add_argument("--n-points", type=int, default=50)
    p_ex.set_defaults(func=_cmd_example1)

    p_rep = sub.add_parser("report", help="aggregate saved runs into one CSV")
    p_rep.add_argument(
        "--results", nargs="+", required=True,
        help="directories searched recursively for summary.json files",
    )
    p_rep.add_argument("--out", required=True, help="path of the report CSV to write")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TensorFormatError, InconsistentEvidenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
