"""Experiment loop, metrics, timing profile, and result files."""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionConfig, select_batch, _greedy_ical
from .errors import ConfigError, InvalidInputError
from .kernels import kernel_stack
from .models import (
    DiscreteHypothesisModel,
    EnsembleModel,
    TrainingParams,
    ensemble_predict_samples,
    ensemble_train,
    entropy,
    posterior_update,
    sample_predictions,
)

FORMAT_VERSION = "1"

BACKENDS = ("discrete", "ensemble", "external")

_NLL_CLIP = 1e-12


@dataclass
class ExperimentConfig:
    """Everything one run needs: a backend, a task split, and a policy.

    labels holds the ground truth for every point; initial/pool/test are
    disjoint index arrays into it.  Which other fields are required
    depends on the backend: a discrete model, a feature matrix for the
    ensemble, or a fixed externally produced prediction tensor.
    """

    backend: str
    labels: np.ndarray
    initial_indices: np.ndarray
    pool_indices: np.ndarray
    test_indices: np.ndarray
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    n_rounds: int = 10
    rng_seed: int = 0
    model: DiscreteHypothesisModel | None = None
    features: np.ndarray | None = None
    n_members: int = 20
    training: TrainingParams = field(default_factory=TrainingParams)
    predictions: np.ndarray | None = None
    record_timing: bool = True

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        self.labels = np.asarray(self.labels)
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise ConfigError("labels must be integers")
        n = self.labels.shape[0]
        self.initial_indices = np.asarray(self.initial_indices, dtype=int)
        self.pool_indices = np.asarray(self.pool_indices, dtype=int)
        self.test_indices = np.asarray(self.test_indices, dtype=int)
        all_idx = np.concatenate(
            [self.initial_indices, self.pool_indices, self.test_indices]
        )
        if all_idx.size and (all_idx.min() < 0 or all_idx.max() >= n):
            raise ConfigError("split indices out of range")
        if np.unique(all_idx).size != all_idx.size:
            raise ConfigError("initial/pool/test must be disjoint")
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if self.pool_indices.size < self.n_rounds * self.acquisition.batch_size:
            raise ConfigError(
                f"pool of {self.pool_indices.size} cannot supply "
                f"{self.n_rounds} rounds of {self.acquisition.batch_size}"
            )
        if self.backend == "discrete":
            if self.model is None:
                raise ConfigError("discrete backend requires a model")
            if self.model.n_points != n:
                raise ConfigError("model and labels disagree on point count")
        elif self.backend == "ensemble":
            if self.features is None:
                raise ConfigError("ensemble backend requires features")
            if np.asarray(self.features).shape[0] != n:
                raise ConfigError("features and labels disagree on point count")
            if self.initial_indices.size < 2:
                raise ConfigError("ensemble backend needs a non-empty initial set")
        elif self.backend == "external":
            if self.predictions is None:
                raise ConfigError("external backend requires a prediction tensor")
            if np.asarray(self.predictions).shape[0] != n:
                raise ConfigError("predictions and labels disagree on point count")
        if self.acquisition.policy == "fass" and self.features is None:
            raise ConfigError("fass policy requires features")

    @property
    def n_classes(self) -> int:
        if self.backend == "discrete":
            return self.model.n_classes
        if self.backend == "external":
            return np.asarray(self.predictions).shape[2]
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class MetricsRecord:
    round: int
    train_size: int
    accuracy: float | None
    nll: float | None
    pool_entropy: float
    label_histogram: tuple[int, ...]
    batch_seconds: float | None
    acquired: tuple[int, ...]


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[MetricsRecord, ...]
    acquired: tuple[int, ...]           # global indices in acquisition order


def accuracy_score(preds: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of points whose mean predictive argmax matches the label."""
    mean_pred = np.asarray(preds, dtype=np.float64).mean(axis=1)
    return float(np.mean(mean_pred.argmax(axis=1) == np.asarray(labels)))


def negative_log_likelihood(preds: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log mean-predictive probability of the true label,
    clipped below at 1e-12 so impossible labels stay finite."""
    mean_pred = np.asarray(preds, dtype=np.float64).mean(axis=1)
    p = mean_pred[np.arange(len(labels)), np.asarray(labels)]
    return float(-np.log(np.clip(p, _NLL_CLIP, None)).mean() + 0.0)


def mean_predictive_entropy(preds: np.ndarray) -> float:
    """Mean entropy of the mean predictive; 0.0 for an empty point set."""
    arr = np.asarray(preds, dtype=np.float64)
    if arr.shape[0] == 0:
        return 0.0
    return float(entropy(arr.mean(axis=1), axis=-1).mean())


def label_histogram(labels: np.ndarray, n_classes: int) -> tuple[int, ...]:
    return tuple(int(v) for v in np.bincount(labels, minlength=n_classes))


class _DiscreteState:
    def __init__(self, model: DiscreteHypothesisModel, cfg: ExperimentConfig):
        self.model = model
        self.m = cfg.acquisition.n_samples

    def observe(self, indices, labels):
        for i, y in zip(indices, labels):
            self.model = posterior_update(self.model, int(i), int(y))

    def refit(self, train_indices, labels, seed):
        pass  # the posterior is exact and already conditioned

    def predict(self, indices, seed):
        return sample_predictions(self.model, indices, self.m, seed)


class _EnsembleState:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.model: EnsembleModel | None = None

    def observe(self, indices, labels):
        pass  # retraining happens from scratch per round

    def refit(self, train_indices, labels, seed):
        self.model = ensemble_train(
            self.cfg.features[train_indices],
            labels[train_indices],
            self.cfg.n_members,
            self.cfg.training,
            n_classes=self.cfg.n_classes,
            seed=seed,
        )

    def predict(self, indices, seed):
        return ensemble_predict_samples(self.model, self.cfg.features[indices])


class _ExternalState:
    def __init__(self, cfg: ExperimentConfig):
        self.preds = np.asarray(cfg.predictions, dtype=np.float64)

    def observe(self, indices, labels):
        pass

    def refit(self, train_indices, labels, seed):
        pass  # predictions are fixed by construction

    def predict(self, indices, seed):
        return self.preds[indices]


def _make_state(cfg: ExperimentConfig):
    if cfg.backend == "discrete":
        return _DiscreteState(cfg.model, cfg)
    if cfg.backend == "ensemble":
        return _EnsembleState(cfg)
    return _ExternalState(cfg)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """One active-learning run: acquire, update, measure, repeat.

    Round 0 records the state after conditioning on the initial set only.
    Each later round samples pool predictions, asks the policy for a
    batch, moves it from pool to train, refits, and measures on the test
    set and the remaining pool.  Everything is driven by one master seed.
    """
    master = np.random.default_rng(cfg.rng_seed)
    round_seeds = master.integers(0, 2**62, size=(cfg.n_rounds + 1, 4))
    labels = cfg.labels
    c = cfg.n_classes
    state = _make_state(cfg)
    train = list(int(i) for i in cfg.initial_indices)
    pool = np.array(cfg.pool_indices, dtype=int)
    acquired: list[int] = []

    state.observe(train, labels[train] if train else [])
    state.refit(np.asarray(train, dtype=int), labels, int(round_seeds[0, 3]))

    def measure(round_idx, batch_seconds, new_points):
        test_preds = None
        if cfg.test_indices.size:
            test_preds = state.predict(cfg.test_indices, int(round_seeds[round_idx, 1]))
        pool_preds = (
            state.predict(pool, int(round_seeds[round_idx, 0]) + 1)
            if pool.size
            else np.zeros((0, 1, c))
        )
        return MetricsRecord(
            round=round_idx,
            train_size=len(train),
            accuracy=(
                accuracy_score(test_preds, labels[cfg.test_indices])
                if test_preds is not None
                else None
            ),
            nll=(
                negative_log_likelihood(test_preds, labels[cfg.test_indices])
                if test_preds is not None
                else None
            ),
            pool_entropy=mean_predictive_entropy(pool_preds),
            label_histogram=label_histogram(
                labels[np.asarray(acquired, dtype=int)] if acquired else np.array([], dtype=int),
                c,
            ),
            batch_seconds=batch_seconds,
            acquired=tuple(new_points),
        )

    records = [measure(0, None, ())]
    for t in range(1, cfg.n_rounds + 1):
        pool_preds = state.predict(pool, int(round_seeds[t, 0]))
        acq_cfg = dataclasses.replace(
            cfg.acquisition, rng_seed=int(round_seeds[t, 2])
        )
        feats = cfg.features[pool] if cfg.features is not None else None
        start = time.perf_counter()
        batch = select_batch(pool_preds, acq_cfg, features=feats)
        elapsed = time.perf_counter() - start
        picked = [int(pool[i]) for i in batch.indices]
        acquired.extend(picked)
        train.extend(picked)
        keep = np.ones(pool.size, dtype=bool)
        keep[list(batch.indices)] = False
        pool = pool[keep]
        state.observe(picked, labels[picked])
        state.refit(np.asarray(train, dtype=int), labels, int(round_seeds[t, 3]))
        records.append(
            measure(t, elapsed if cfg.record_timing else None, picked)
        )
    return ExperimentResult(tuple(records), tuple(acquired))


@dataclass(frozen=True)
class TimingRow:
    minibatch: int
    seconds: float


def timing_profile(
    preds: np.ndarray,
    cfg: AcquisitionConfig,
    minibatch_sizes=(1, 2, 5, 10),
    repeats: int = 3,
) -> list[TimingRow]:
    """Wall time of greedy batch construction as the minibatch size varies.

    The per-point Gram matrices are computed once up front and shared, as
    they are within a round, so the timed region is exactly the part
    whose pass count shrinks with the minibatch: scoring passes over the
    candidate stack.  Each size is run ``repeats`` times; the median is
    reported.
    """
    sizes = [int(s) for s in minibatch_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise InvalidInputError("minibatch sizes must be positive")
    kstack = kernel_stack(np.asarray(preds, dtype=np.float64), cfg.kernel)
    _greedy_ical(kstack, dataclasses.replace(cfg, minibatch=sizes[0]))  # warm path
    rows = []
    for size in sizes:
        run_cfg = dataclasses.replace(cfg, minibatch=size)
        times = []
        for _ in range(max(1, repeats)):
            start = time.perf_counter()
            _greedy_ical(kstack, run_cfg)
            times.append(time.perf_counter() - start)
        rows.append(TimingRow(size, float(np.median(times))))
    return rows


# ---------------------------------------------------------------------------
# result files


def _record_dict(rec: MetricsRecord) -> dict:
    return {
        "round": rec.round,
        "train_size": rec.train_size,
        "accuracy": rec.accuracy,
        "nll": rec.nll,
        "pool_entropy": rec.pool_entropy,
        "label_histogram": list(rec.label_histogram),
        "batch_seconds": rec.batch_seconds,
        "acquired": list(rec.acquired),
    }


def write_results_csv(path, result: ExperimentResult, n_classes: int) -> None:
    """Per-round metrics table; empty cells where a metric was not taken."""
    lines = []
    hist_cols = ",".join(f"hist_{k}" for k in range(n_classes))
    lines.append(f"round,train_size,accuracy,nll,pool_entropy,{hist_cols},batch_seconds")
    for rec in result.records:
        cells = [
            str(rec.round),
            str(rec.train_size),
            "" if rec.accuracy is None else f"{rec.accuracy:.6f}",
            "" if rec.nll is None else f"{rec.nll:.6f}",
            f"{rec.pool_entropy:.6f}",
        ]
        cells.extend(str(v) for v in rec.label_histogram)
        cells.append("" if rec.batch_seconds is None else f"{rec.batch_seconds:.6f}")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_json(path, cfg: ExperimentConfig, result: ExperimentResult) -> None:
    acq = cfg.acquisition
    payload = {
        "format_version": FORMAT_VERSION,
        "backend": cfg.backend,
        "policy": acq.policy,
        "batch_size": acq.batch_size,
        "minibatch": acq.minibatch,
        "n_samples": acq.n_samples,
        "r": acq.r,
        "beta": acq.beta,
        "kernel_scales": list(acq.kernel.scales),
        "n_rounds": cfg.n_rounds,
        "rng_seed": cfg.rng_seed,
        "n_pool": int(np.asarray(cfg.pool_indices).size),
        "n_test": int(np.asarray(cfg.test_indices).size),
        "n_classes": cfg.n_classes,
        "records": [_record_dict(r) for r in result.records],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _collect_summaries(result_dirs) -> list[dict]:
    found = []
    for d in result_dirs:
        root = Path(d)
        if not root.exists():
            raise InvalidInputError(f"results directory {root} does not exist")
        for p in sorted(root.rglob("summary.json")):
            payload = json.loads(p.read_text())
            if payload.get("format_version") != FORMAT_VERSION:
                raise ConfigError(
                    f"{p}: format_version {payload.get('format_version')!r} "
                    f"is not supported (expected {FORMAT_VERSION!r})"
                )
            found.append(payload)
    if not found:
        raise InvalidInputError("no summary.json files found under the given directories")
    return found


def write_report_csv(path, result_dirs) -> None:
    """Aggregate runs by policy and round into mean/std columns.

    Spread columns are population standard deviations (ddof 0) over the
    runs in each group, stated in the header comment.
    """
    summaries = _collect_summaries(result_dirs)
    groups: dict[str, list[dict]] = {}
    for s in summaries:
        groups.setdefault(s["policy"], []).append(s)

    def agg(values):
        vals = [v for v in values if v is not None]
        if not vals:
            return "", ""
        arr = np.asarray(vals, dtype=np.float64)
        return f"{arr.mean():.6f}", f"{arr.std(ddof=0):.6f}"

    lines = [
        "# per-policy aggregation; *_std columns are population standard deviations (ddof=0)",
        "policy,round,n_runs,accuracy_mean,accuracy_std,nll_mean,nll_std,"
        "pool_entropy_mean,pool_entropy_std",
    ]
    for policy in sorted(groups):
        runs = groups[policy]
        n_rounds = max(len(r["records"]) for r in runs)
        for t in range(n_rounds):
            recs = [r["records"][t] for r in runs if t < len(r["records"])]
            acc_m, acc_s = agg([r["accuracy"] for r in recs])
            nll_m, nll_s = agg([r["nll"] for r in recs])
            ent_m, ent_s = agg([r["pool_entropy"] for r in recs])
            lines.append(
                f"{policy},{t},{len(recs)},{acc_m},{acc_s},{nll_m},{nll_s},{ent_m},{ent_s}"
            )
    Path(path).write_text("\n".join(lines) + "\n")
