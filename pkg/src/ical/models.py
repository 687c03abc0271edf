"""Prediction backends and the prediction tensor interchange format.

Everything downstream of a model sees one thing only: a prediction tensor
of shape (n_points, m, c) whose slice [i, t, :] is the class distribution
for point i under the t-th posterior draw.  The draw index t must refer to
the *same* posterior sample for every point, otherwise cross-point
dependence is destroyed and batch scoring degenerates.

Two backends produce such tensors here (an exact discrete-hypothesis
posterior and a bootstrap ensemble of softmax linear models); externally
produced tensors can be loaded from disk via :func:`load_predictions`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentEvidenceError, InvalidInputError, TensorFormatError

MAGIC = b"ICALPT01"
_HEADER_SIZE = 8 + 3 * 8
_SIMPLEX_TOL = 1e-6
_MAX_ELEMENTS = 2**33  # refuse headers that would ask for >32 GiB


def entropy(probs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shannon entropy in nats along ``axis``; 0 * log 0 counts as 0."""
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return -terms.sum(axis=axis)


# ---------------------------------------------------------------------------
# discrete hypothesis backend


@dataclass
class DiscreteHypothesisModel:
    """Finite hypothesis space with an exact posterior.

    likelihoods[i, k, y] is p(label y | point i, hypothesis k); every
    (i, k) row must be a probability vector.  log_weights holds the
    unnormalized log posterior over hypotheses.
    """

    likelihoods: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        lik = np.asarray(self.likelihoods, dtype=np.float64)
        if lik.ndim != 3:
            raise InvalidInputError(
                f"likelihoods must be (n_points, n_hypotheses, n_classes), got {lik.shape}"
            )
        if not np.all(np.isfinite(lik)) or np.any(lik < 0):
            raise InvalidInputError("likelihoods must be finite and nonnegative")
        if np.any(np.abs(lik.sum(axis=2) - 1.0) > _SIMPLEX_TOL):
            raise InvalidInputError("each likelihood row must sum to 1")
        lw = np.asarray(self.log_weights, dtype=np.float64)
        if lw.shape != (lik.shape[1],):
            raise InvalidInputError(
                f"log_weights must have shape ({lik.shape[1]},), got {lw.shape}"
            )
        norm = _logsumexp(lw)
        if not np.isfinite(norm):
            raise InvalidInputError("posterior has no support")
        self.likelihoods = lik
        self.log_weights = lw - norm

    @property
    def n_points(self) -> int:
        return self.likelihoods.shape[0]

    @property
    def n_hypotheses(self) -> int:
        return self.likelihoods.shape[1]

    @property
    def n_classes(self) -> int:
        return self.likelihoods.shape[2]

    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def _logsumexp(x: np.ndarray) -> float:
    hi = np.max(x)
    if not np.isfinite(hi):
        return float(hi)
    return float(hi + np.log(np.exp(x - hi).sum()))


def uniform_prior(n_hypotheses: int) -> np.ndarray:
    return np.zeros(n_hypotheses)


def posterior_update(
    model: DiscreteHypothesisModel, point_idx: int, label: int
) -> DiscreteHypothesisModel:
    """Condition on an observed label; returns a new model.

    Raises InconsistentEvidenceError if the label has zero likelihood
    under every hypothesis with posterior support.
    """
    if not 0 <= point_idx < model.n_points:
        raise InvalidInputError(f"point index {point_idx} out of range")
    if not 0 <= label < model.n_classes:
        raise InvalidInputError(f"label {label} out of range")
    with np.errstate(divide="ignore"):
        step = np.log(model.likelihoods[point_idx, :, label])
    new_lw = model.log_weights + step
    if not np.isfinite(_logsumexp(new_lw)):
        raise InconsistentEvidenceError(
            f"label {label} at point {point_idx} has zero posterior likelihood"
        )
    return DiscreteHypothesisModel(model.likelihoods, new_lw)


def predictive(model: DiscreteHypothesisModel, indices=None) -> np.ndarray:
    """Exact posterior predictive distribution, shape (n, c)."""
    lik = model.likelihoods if indices is None else model.likelihoods[indices]
    return np.einsum("ikc,k->ic", lik, model.weights())


def sample_predictions(
    model: DiscreteHypothesisModel, indices, m: int, seed: int
) -> np.ndarray:
    """Monte Carlo prediction tensor, shape (n, m, c).

    Draws m hypotheses i.i.d. from the posterior and reads off each
    point's likelihood row under the same draw, so slot t is one coherent
    posterior sample across all points.
    """
    if m < 1:
        raise InvalidInputError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    draws = rng.choice(model.n_hypotheses, size=m, p=model.weights())
    lik = model.likelihoods if indices is None else model.likelihoods[indices]
    return np.ascontiguousarray(lik[:, draws, :])


def posterior_entropy(model: DiscreteHypothesisModel) -> float:
    return float(entropy(model.weights()))


def mutual_information(model: DiscreteHypothesisModel, point_idx: int) -> float:
    """Exact label/hypothesis mutual information at one point, in nats."""
    w = model.weights()
    row = model.likelihoods[point_idx]
    marginal = w @ row
    return float(entropy(marginal) - w @ entropy(row, axis=1))


def expected_pool_entropy(
    model: DiscreteHypothesisModel, point_idx: int, eval_indices
) -> float:
    """Mean predictive entropy over ``eval_indices`` expected under the
    label distribution of ``point_idx``.

    Outcomes with zero marginal probability contribute nothing.
    """
    w = model.weights()
    marginal = w @ model.likelihoods[point_idx]
    total = 0.0
    for label, p in enumerate(marginal):
        if p <= 0.0:
            continue
        updated = posterior_update(model, point_idx, label)
        total += p * float(np.mean(entropy(predictive(updated, eval_indices), axis=1)))
    return total


def example1_model(n_points: int = 50) -> DiscreteHypothesisModel:
    """A pool with one high-information point and n_points - 1 duplicates.

    Ten hypotheses, uniform prior, four classes, one-hot likelihoods.
    Point 0 takes label k under hypothesis k for k < 3 and label 3 under
    the remaining seven hypotheses, so its label is highly informative
    about the hypothesis.  Points 1..n-1 are identical: label 0 under
    hypotheses 0..8 and label 1 under hypothesis 9.  Acquiring any one
    duplicate resolves them all; acquiring point 0 usually leaves them
    uncertain.
    """
    if n_points < 2:
        raise InvalidInputError("need at least 2 points")
    lik = np.zeros((n_points, 10, 4))
    for k in range(10):
        lik[0, k, min(k, 3)] = 1.0
    lik[1:, :9, 0] = 1.0
    lik[1:, 9, 1] = 1.0
    return DiscreteHypothesisModel(lik, uniform_prior(10))


@dataclass(frozen=True)
class Example1Stats:
    mi_x1: float
    mi_clone: float
    clone_entropy_after_x1: float
    clone_entropy_after_clone: float


def example1_stats(n_points: int = 50) -> Example1Stats:
    """Closed-form comparison quantities for the duplicate-pool model.

    ``clone_entropy_after_*`` is the expected predictive entropy of the
    duplicates that remain unlabeled after acquiring the named point.
    """
    model = example1_model(n_points)
    clones = np.arange(1, n_points)
    return Example1Stats(
        mi_x1=mutual_information(model, 0),
        mi_clone=mutual_information(model, 1),
        clone_entropy_after_x1=expected_pool_entropy(model, 0, clones),
        clone_entropy_after_clone=expected_pool_entropy(
            model, 1, clones[1:] if n_points > 2 else clones
        ),
    )


# ---------------------------------------------------------------------------
# bootstrap ensemble backend


@dataclass(frozen=True)
class TrainingParams:
    learning_rate: float = 0.5
    epochs: int = 200
    bootstrap_fraction: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0 or not np.isfinite(self.learning_rate):
            raise InvalidInputError("learning_rate must be positive")
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if not 0.0 < self.bootstrap_fraction <= 1.0:
            raise InvalidInputError("bootstrap_fraction must be in (0, 1]")


@dataclass
class EnsembleModel:
    """Bootstrap ensemble of multinomial logistic models.

    weights has shape (n_members, n_classes, n_features), biases
    (n_members, n_classes).
    """

    weights: np.ndarray
    biases: np.ndarray

    @property
    def n_members(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def ensemble_train(
    features: np.ndarray,
    labels: np.ndarray,
    n_members: int,
    params: TrainingParams = TrainingParams(),
    n_classes: int | None = None,
    seed: int = 0,
) -> EnsembleModel:
    """Fit every member by full-batch gradient descent on its own bootstrap
    resample of the training set.

    All members train in lockstep on stacked arrays, so the result depends
    only on the seed, never on scheduling.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidInputError("features must be (n, d) aligned with labels")
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 training points")
    if n_members < 2:
        raise InvalidInputError("need at least 2 ensemble members")
    if not np.issubdtype(y.dtype, np.integer):
        raise InvalidInputError("labels must be integers")
    c = int(y.max()) + 1 if n_classes is None else n_classes
    if y.min() < 0 or int(y.max()) >= c:
        raise InvalidInputError("labels out of range")
    if np.unique(y).size < 2:
        raise InvalidInputError("training set must contain at least 2 classes")

    n, d = X.shape
    nb = max(2, int(round(params.bootstrap_fraction * n)))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_members, nb))
    W = 0.01 * rng.standard_normal((n_members, c, d))
    b = np.zeros((n_members, c))

    Xb = X[idx]                                   # (M, nb, d)
    onehot = np.eye(c)[y[idx]]                    # (M, nb, c)
    for _ in range(params.epochs):
        logits = np.einsum("mnd,mcd->mnc", Xb, W) + b[:, None, :]
        err = _softmax(logits) - onehot
        W -= params.learning_rate * np.einsum("mnc,mnd->mcd", err, Xb) / nb
        b -= params.learning_rate * err.mean(axis=1)
    return EnsembleModel(W, b)


def ensemble_predict_samples(model: EnsembleModel, features: np.ndarray) -> np.ndarray:
    """Prediction tensor (n, n_members, c); member index doubles as the
    posterior-draw index."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[2]:
        raise InvalidInputError(
            f"features must be (n, {model.weights.shape[2]}), got {X.shape}"
        )
    logits = np.einsum("nd,mcd->nmc", X, model.weights) + model.biases[None]
    return _softmax(logits)


# ---------------------------------------------------------------------------
# prediction tensor files
#
# layout: 8 magic bytes "ICALPT01", then n_points, m, n_classes as
# little-endian uint64, then n_points * m * n_classes little-endian float32
# values in C order (point-major, sample-major, class-minor)


def save_predictions(path, preds: np.ndarray) -> None:
    """Write a prediction tensor to ``path`` in the binary format above."""
    arr = np.asarray(preds, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(f"expected (n_points, m, c), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidInputError("prediction values must be finite and in [0, 1]")
    if np.any(np.abs(arr.sum(axis=2) - 1.0) > _SIMPLEX_TOL):
        raise InvalidInputError("each (point, sample) row must sum to 1")
    n, m, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQQ", n, m, c))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_predictions(path) -> np.ndarray:
    """Read a prediction tensor; returns float64 (n_points, m, c).

    Malformed files raise TensorFormatError carrying the byte offset of
    the first problem found.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC):
        raise TensorFormatError("file truncated before magic", len(data))
    if data[: len(MAGIC)] != MAGIC:
        raise TensorFormatError("bad magic, not a prediction tensor file", 0)
    if len(data) < _HEADER_SIZE:
        raise TensorFormatError("file truncated inside header", len(data))
    n, m, c = struct.unpack("<QQQ", data[len(MAGIC) : _HEADER_SIZE])
    if n == 0 or m == 0 or c == 0:
        raise TensorFormatError("zero dimension in header", len(MAGIC))
    count = n * m * c
    if count > _MAX_ELEMENTS:
        raise TensorFormatError("header declares an implausibly large tensor", len(MAGIC))
    expected = _HEADER_SIZE + 4 * count
    if len(data) < expected:
        raise TensorFormatError("payload truncated", len(data))
    if len(data) > expected:
        raise TensorFormatError("trailing bytes after payload", expected)
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER_SIZE)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise TensorFormatError(
            "non-finite prediction value", _HEADER_SIZE + 4 * int(bad[0])
        )
    bad = np.flatnonzero((flat < 0.0) | (flat > 1.0))
    if bad.size:
        raise TensorFormatError(
            "prediction value outside [0, 1]", _HEADER_SIZE + 4 * int(bad[0])
        )
    arr = flat.astype(np.float64).reshape(int(n), int(m), int(c))
    sums = arr.sum(axis=2)
    bad_rows = np.argwhere(np.abs(sums - 1.0) > _SIMPLEX_TOL)
    if bad_rows.size:
        i, t = (int(v) for v in bad_rows[0])
        raise TensorFormatError(
            f"row (point {i}, sample {t}) does not sum to 1",
            _HEADER_SIZE + 4 * (i * int(m) * int(c) + t * int(c)),
        )
    return arr
