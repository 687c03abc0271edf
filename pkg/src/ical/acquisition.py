"""Batch acquisition policies over prediction tensors.

The main policy scores a candidate batch by the dependence between the
batch's pooled predictive samples and the rest of the unlabeled pool:
labels whose distribution is strongly coupled to the pool tell the model
the most about everything it has not labeled yet.  Two algebraic facts
keep the greedy loop cheap:

* pooling the batch by averaging its Gram matrices keeps the score a sum
  of per-member terms, because the two-variable statistic is linear in
  each argument, and
* pooling the reference set by summing its Gram matrices lets one
  centered reference matrix serve every candidate.

So each greedy pass is one matrix-vector product over the candidate
kernel stack, and adding the top L candidates per pass divides the number
of passes by L.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dhsic import center_kernel, hsic2
from .errors import InvalidInputError
from .kernels import KernelSpec, kernel_stack, mean_kernels
from .models import entropy

POLICIES = ("ical", "ical_pointwise", "random", "maxent", "bald", "batchbald", "fass")

_RATIO_FLOOR = 1e-12


@dataclass(frozen=True)
class AcquisitionConfig:
    policy: str = "ical"
    batch_size: int = 10
    minibatch: int = 1
    n_samples: int = 64
    r: int = 200
    beta: float = 10.0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    rng_seed: int = 0

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise InvalidInputError(
                f"unknown policy {self.policy!r}, expected one of {POLICIES}"
            )
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if self.minibatch < 1:
            raise InvalidInputError("minibatch must be >= 1")
        if self.n_samples < 4:
            raise InvalidInputError("n_samples must be >= 4")
        if self.r < 1:
            raise InvalidInputError("r must be >= 1")
        if self.beta < 1.0:
            raise InvalidInputError("beta must be >= 1")


@dataclass(frozen=True)
class AcquisitionBatch:
    """Chosen pool indices in acquisition order, plus per-addition scores
    for policies that have them."""

    indices: tuple[int, ...]
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise InvalidInputError("batch contains duplicate indices")
        if self.scores is not None and len(self.scores) != len(self.indices):
            raise InvalidInputError("scores must align with indices")


def _check_preds(preds: np.ndarray, min_m: int = 1) -> np.ndarray:
    arr = np.asarray(preds, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(
            f"predictions must be (n_points, m, c), got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("predictions contain NaN or inf")
    if arr.shape[1] < min_m:
        raise InvalidInputError(
            f"policy needs at least {min_m} samples per point, got {arr.shape[1]}"
        )
    return arr


def _check_pool(n: int, cfg: AcquisitionConfig) -> None:
    if cfg.batch_size > n:
        raise InvalidInputError(
            f"batch_size {cfg.batch_size} exceeds pool size {n}"
        )


def _top_indices(scores: np.ndarray, k: int, exclude=None) -> np.ndarray:
    """Indices of the k largest scores, ties broken toward lower index."""
    masked = np.asarray(scores, dtype=np.float64).copy()
    if exclude is not None and len(exclude):
        masked[list(exclude)] = -np.inf
    order = np.lexsort((np.arange(masked.size), -masked))
    return order[:k]


def score_ical(candidate_kernels, pool_kernel: np.ndarray) -> float:
    """Dependence between a candidate batch and a reference pool.

    ``candidate_kernels`` are the batch members' Gram matrices (pooled by
    averaging); ``pool_kernel`` is the reference Gram matrix, typically a
    sum over reference points.
    """
    return hsic2(mean_kernels(candidate_kernels), pool_kernel).value


def _greedy_ical(
    kstack: np.ndarray,
    cfg: AcquisitionConfig,
    pointwise: bool = False,
    n_classes: int | None = None,
) -> AcquisitionBatch:
    """Greedy batch construction over a precomputed kernel stack.

    One scoring pass per minibatch: draw the reference subset R from the
    points outside the batch, fold their kernels into one centered
    reference matrix, score every candidate with a single mat-vec, then
    commit the top L.
    """
    n, m, _ = kstack.shape
    _check_pool(n, cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    flat = kstack.reshape(n, m * m)
    m2 = float(m * m)

    chosen: list[int] = []
    scores_out: list[float] = []
    in_batch = np.zeros(n, dtype=bool)
    while len(chosen) < cfg.batch_size:
        take = min(cfg.minibatch, cfg.batch_size - len(chosen))
        avail = np.flatnonzero(~in_batch)
        r_size = min(cfg.r, avail.size)
        ref = rng.choice(avail, size=r_size, replace=False)
        pool_sum = kstack[ref].sum(axis=0)
        weights = center_kernel(pool_sum).ravel() / m2
        contrib = flat @ weights
        j = len(chosen)
        base = contrib[chosen].sum()
        cand_scores = (base + contrib) / (j + 1)
        if pointwise:
            cand_scores = _pointwise_scores(
                flat, kstack, ref, chosen, cand_scores, m2, n_classes
            )
        picks = _top_indices(cand_scores, take, exclude=chosen)
        for p in picks:
            p = int(p)
            chosen.append(p)
            in_batch[p] = True
            # the score under which the candidate won its scoring pass
            scores_out.append(float(cand_scores[p]))
    return AcquisitionBatch(tuple(chosen), tuple(scores_out))


def _pointwise_scores(
    flat: np.ndarray,
    kstack: np.ndarray,
    ref: np.ndarray,
    chosen: list[int],
    cand_scores: np.ndarray,
    m2: float,
    n_classes: int | None,
) -> np.ndarray:
    """Rescale pooled scores by how much each candidate lifts per-reference
    dependence: max-of-ratio averaged over R, minus one.

    With an empty batch there is no ratio to take, so the pooled score is
    used as is.
    """
    j = len(chosen)
    if j == 0:
        return cand_scores
    if n_classes is not None and ref.size < n_classes:
        warnings.warn(
            "fewer reference points than classes; pointwise ratios are coarse",
            stacklevel=3,
        )
    ref_flat = np.stack([center_kernel(kstack[i]).ravel() for i in ref]) / m2
    per_ref = flat @ ref_flat.T                     # (n, |R|) pair dependences
    batch_mean = per_ref[chosen].sum(axis=0) / j    # d_i(B) for each i in R
    denom = np.maximum(batch_mean, _RATIO_FLOOR)
    joined = (per_ref + per_ref[chosen].sum(axis=0)) / (j + 1)
    ratios = np.maximum(joined / denom, 1.0)
    lift = ratios.mean(axis=1) - 1.0
    return cand_scores * lift


def select_ical(preds: np.ndarray, cfg: AcquisitionConfig) -> AcquisitionBatch:
    """Greedy pooled-dependence batch selection."""
    arr = _check_preds(preds, min_m=4)
    _check_pool(arr.shape[0], cfg)
    return _greedy_ical(kernel_stack(arr, cfg.kernel), cfg, pointwise=False)


def select_ical_pointwise(preds: np.ndarray, cfg: AcquisitionConfig) -> AcquisitionBatch:
    """Pooled-dependence selection with a per-reference redundancy guard.

    A candidate identical to a committed batch member leaves every
    per-reference dependence unchanged, so its lift term is zero and it is
    never taken while any strictly informative candidate remains.
    """
    arr = _check_preds(preds, min_m=4)
    _check_pool(arr.shape[0], cfg)
    return _greedy_ical(
        kernel_stack(arr, cfg.kernel), cfg, pointwise=True, n_classes=arr.shape[2]
    )


def select_random(preds: np.ndarray, cfg: AcquisitionConfig) -> AcquisitionBatch:
    """Uniform draw without replacement; the control every other policy
    must beat."""
    arr = _check_preds(preds, min_m=1)
    _check_pool(arr.shape[0], cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    picks = rng.choice(arr.shape[0], size=cfg.batch_size, replace=False)
    return AcquisitionBatch(tuple(int(p) for p in picks), None)


def select_maxent(preds: np.ndarray, cfg: AcquisitionConfig) -> AcquisitionBatch:
    """Top-B by entropy of the mean predictive distribution."""
    arr = _check_preds(preds, min_m=1)
    _check_pool(arr.shape[0], cfg)
    ent = entropy(arr.mean(axis=1), axis=-1)
    picks = _top_indices(ent, cfg.batch_size)
    return AcquisitionBatch(tuple(int(p) for p in picks), tuple(ent[picks]))


def score_bald(preds: np.ndarray) -> np.ndarray:
    """Mutual information between label and model draw, per point.

    Accepts (..., m, c); returns the matching leading shape.  Computed as
    entropy of the mean predictive minus mean per-draw entropy.
    """
    arr = np.asarray(preds, dtype=np.float64)
    if arr.ndim < 2:
        raise InvalidInputError("predictions must have sample and class axes")
    return entropy(arr.mean(axis=-2), axis=-1) - entropy(arr, axis=-1).mean(axis=-1)


def select_bald(preds: np.ndarray, cfg: AcquisitionConfig) -> AcquisitionBatch:
    """Top-B by per-point mutual information."""
    arr = _check_preds(preds, min_m=1)
    _check_pool(arr.shape[0], cfg)
    mi = score_bald(arr)
    picks = _top_indices(mi, cfg.batch_size)
    return AcquisitionBatch(tuple(int(p) for p in picks), tuple(mi[picks]))


def select_batchbald(
    preds: np.ndarray,
    cfg: AcquisitionConfig,
    exact_limit: int = 1_000_000,
    n_mc_configs: int = 10_000,
) -> AcquisitionBatch:
    """Greedy joint mutual information between batch labels and model draw.

    The joint label entropy is enumerated exactly while c**(j+1) stays
    within ``exact_limit`` label configurations, and estimated by
    importance sampling from the product of mean predictives beyond that.
    With batch_size 1 this is exactly the single-point mutual information
    ranking.
    """
    arr = _check_preds(preds, min_m=1)
    n, m, c = arr.shape
    _check_pool(n, cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    cond = entropy(arr, axis=-1).mean(axis=-1)      # per-point conditional term
    mean_pred = arr.mean(axis=1)

    chosen: list[int] = []
    scores_out: list[float] = []
    joint = np.ones((m, 1))                          # per-draw config probabilities
    cond_sum = 0.0
    for step in range(cfg.batch_size):
        if c ** (step + 1) <= exact_limit:
            # q[cfg_idx, y]: joint predictive over (existing config, new label)
            joint_ent = np.empty(n)
            with np.errstate(divide="ignore", invalid="ignore"):
                for x in range(n):
                    q = joint.T @ arr[x] / m
                    joint_ent[x] = -np.sum(np.where(q > 0, q * np.log(q), 0.0))
        else:
            joint_ent = _mc_joint_entropy(arr, chosen, mean_pred, rng, n_mc_configs)
        scores = joint_ent - (cond_sum + cond)
        pick = int(_top_indices(scores, 1, exclude=chosen)[0])
        chosen.append(pick)
        scores_out.append(float(scores[pick]))
        cond_sum += cond[pick]
        if step + 1 < cfg.batch_size and c ** (step + 1) <= exact_limit:
            joint = (joint[:, :, None] * arr[pick][:, None, :]).reshape(m, -1)
    return AcquisitionBatch(tuple(chosen), tuple(scores_out))


def _sample_labels(probs: np.ndarray, n_draws: int, rng) -> np.ndarray:
    """Inverse-CDF draws: probs (..., c) -> labels (..., n_draws)."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1] + (n_draws,))
    return (u[..., :, None] > cdf[..., None, :]).sum(axis=-1)


def _mc_joint_entropy(arr, chosen, mean_pred, rng, n_configs):
    """Importance-sampled joint label entropy for every candidate extension.

    Label configurations come from the product of mean predictives, the
    natural proposal because the joint predictive factorizes that way
    under independent draws; the weight corrects for the coupling the
    shared model draw induces.
    """
    n, m, _ = arr.shape
    batch_labels = _sample_labels(mean_pred[chosen], n_configs, rng)  # (j, N)
    per_draw = np.ones((m, n_configs))
    log_prop = np.zeros(n_configs)
    for b, lbls in zip(chosen, batch_labels):
        per_draw *= arr[b][:, lbls]
        log_prop += np.log(mean_pred[b][lbls])
    cand_labels = _sample_labels(mean_pred, n_configs, rng)           # (n, N)
    out = np.empty(n)
    for x in range(n):
        p = (per_draw * arr[x][:, cand_labels[x]]).mean(axis=0)
        prop = np.exp(log_prop) * mean_pred[x][cand_labels[x]]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0, p / prop * np.log(p), 0.0)
        out[x] = -terms.mean()
    return out


def select_fass(
    preds: np.ndarray, features: np.ndarray, cfg: AcquisitionConfig
) -> AcquisitionBatch:
    """Entropy filter plus facility-location coverage in feature space.

    The beta * B highest-entropy candidates form the filtered set; within
    it, greedy facility location maximizes summed similarity to the chosen
    set, where similarity counts only between points sharing a predicted
    label and is the filtered set's squared diameter minus the squared
    distance.  With beta = 1 the filter already has size B and the policy
    returns exactly the entropy top-B as a set.
    """
    arr = _check_preds(preds, min_m=1)
    n = arr.shape[0]
    _check_pool(n, cfg)
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != n:
        raise InvalidInputError(
            f"features must be (n_points, d) aligned with predictions, got {X.shape}"
        )
    mean_pred = arr.mean(axis=1)
    ent = entropy(mean_pred, axis=-1)
    filt_size = min(max(int(cfg.beta * cfg.batch_size), cfg.batch_size), n)
    filt = np.sort(_top_indices(ent, filt_size))
    Xf = X[filt]
    labels = mean_pred[filt].argmax(axis=1)
    sq = ((Xf[:, None, :] - Xf[None, :, :]) ** 2).sum(axis=-1)
    sim = sq.max() - sq
    same = labels[:, None] == labels[None, :]

    best = np.zeros(filt_size)                       # current max similarity per point
    chosen_local: list[int] = []
    scores_out: list[float] = []
    for _ in range(cfg.batch_size):
        gains = np.where(same, np.maximum(sim - best[:, None], 0.0), 0.0).sum(axis=0)
        pick = int(_top_indices(gains, 1, exclude=chosen_local)[0])
        chosen_local.append(pick)
        scores_out.append(float(gains[pick]))
        best = np.where(same[:, pick], np.maximum(best, sim[:, pick]), best)
    return AcquisitionBatch(
        tuple(int(filt[i]) for i in chosen_local), tuple(scores_out)
    )


def select_batch(
    preds: np.ndarray, cfg: AcquisitionConfig, features: np.ndarray | None = None
) -> AcquisitionBatch:
    """Dispatch to the policy named in the config."""
    if cfg.policy == "ical":
        return select_ical(preds, cfg)
    if cfg.policy == "ical_pointwise":
        return select_ical_pointwise(preds, cfg)
    if cfg.policy == "random":
        return select_random(preds, cfg)
    if cfg.policy == "maxent":
        return select_maxent(preds, cfg)
    if cfg.policy == "bald":
        return select_bald(preds, cfg)
    if cfg.policy == "batchbald":
        return select_batchbald(preds, cfg)
    if cfg.policy == "fass":
        if features is None:
            raise InvalidInputError("fass requires point features")
        return select_fass(preds, features, cfg)
    raise InvalidInputError(f"unknown policy {cfg.policy!r}")
