"""Benchmark task generators and dataset loading helpers."""

from __future__ import annotations

import csv

import numpy as np

from .errors import InvalidInputError
from .models import DiscreteHypothesisModel, example1_model, uniform_prior


def draw_truth(model: DiscreteHypothesisModel, seed: int) -> tuple[int, np.ndarray]:
    """Sample a ground-truth hypothesis from the prior and the labels it
    induces (sampled per point; deterministic when likelihoods are one-hot).
    """
    rng = np.random.default_rng(seed)
    hyp = int(rng.choice(model.n_hypotheses, p=model.weights()))
    rows = model.likelihoods[:, hyp, :]
    labels = np.array(
        [rng.choice(model.n_classes, p=row / row.sum()) for row in rows]
    )
    return hyp, labels


def example1_task(n_points: int = 50, seed: int = 0):
    """The duplicate-pool model plus a sampled ground truth."""
    model = example1_model(n_points)
    hyp, labels = draw_truth(model, seed)
    return model, hyp, labels


def sparse_variant_task(
    n_points: int = 250,
    n_hypotheses: int = 64,
    n_classes: int = 4,
    seed: int = 0,
):
    """Base labeling plus hypotheses that each deviate at one private point.

    Hypothesis 0 labels every point by a random base labeling; hypothesis
    k > 0 agrees with the base everywhere except at its own point, where
    it uses a different label.  Observing a point settles at most the one
    hypothesis that deviates there, so uncertainty persists exactly at
    the unprobed deviation points: a policy that hunts them down resolves
    the pool, one that samples blindly leaves most of them open.

    Returns (model, true_hypothesis, true_labels).
    """
    if n_points < n_hypotheses - 1:
        raise InvalidInputError("need at least one point per variant hypothesis")
    if n_classes < 2:
        raise InvalidInputError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    base = rng.integers(0, n_classes, size=n_points)
    positions = rng.choice(n_points, size=n_hypotheses - 1, replace=False)
    lik = np.zeros((n_points, n_hypotheses, n_classes))
    lik[np.arange(n_points)[:, None], np.arange(n_hypotheses)[None, :], base[:, None]] = 1.0
    for k, pos in enumerate(positions, start=1):
        alt = int((base[pos] + 1 + rng.integers(0, n_classes - 1)) % n_classes)
        lik[pos, k, base[pos]] = 0.0
        lik[pos, k, alt] = 1.0
    model = DiscreteHypothesisModel(lik, uniform_prior(n_hypotheses))
    hyp, labels = draw_truth(model, seed + 1)
    return model, hyp, labels


def gaussian_blobs(
    n_points: int,
    n_classes: int = 4,
    std: float = 1.0,
    seed: int = 0,
):
    """Isotropic Gaussian clusters with centers spread on a circle.

    Class counts are balanced to within one point.  Returns
    (features (n, 2), labels (n,)).
    """
    if n_points < n_classes:
        raise InvalidInputError("need at least one point per class")
    if std <= 0:
        raise InvalidInputError("std must be positive")
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    centers = 2.0 * np.column_stack([np.cos(angles), np.sin(angles)])
    labels = rng.permutation(np.arange(n_points) % n_classes)
    features = centers[labels] + std * rng.standard_normal((n_points, 2))
    return features, labels


def stratified_split(
    labels: np.ndarray,
    n_initial_per_class: int,
    n_test: int,
    seed: int = 0,
):
    """Disjoint (initial, pool, test) index arrays.

    The initial set takes ``n_initial_per_class`` random points from each
    class; the test set is a random draw from the remainder and the pool
    is everything left.
    """
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    classes = np.unique(y)
    initial = []
    for cls in classes:
        members = np.flatnonzero(y == cls)
        if members.size < n_initial_per_class:
            raise InvalidInputError(
                f"class {cls} has only {members.size} points, "
                f"need {n_initial_per_class} for the initial set"
            )
        initial.append(rng.choice(members, size=n_initial_per_class, replace=False))
    initial = np.sort(np.concatenate(initial)) if initial else np.array([], dtype=int)
    rest = np.setdiff1d(np.arange(y.size), initial)
    if rest.size < n_test:
        raise InvalidInputError("not enough points left for the test set")
    test = np.sort(rng.choice(rest, size=n_test, replace=False))
    pool = np.setdiff1d(rest, test)
    return initial.astype(int), pool.astype(int), test.astype(int)


def plain_split(n_points: int, n_pool: int, n_test: int):
    """First n_pool indices as pool, next n_test as test, empty initial."""
    if n_pool + n_test > n_points:
        raise InvalidInputError("split exceeds the number of points")
    return (
        np.array([], dtype=int),
        np.arange(n_pool),
        np.arange(n_pool, n_pool + n_test),
    )


def load_dataset_csv(path):
    """Read a dataset: CSV with a header row, feature columns, and a final
    integer label column.  Returns (features (n, d), labels (n,))."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty dataset file") from None
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                feats.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    if not feats:
        raise InvalidInputError(f"{path}: no data rows")
    features = np.asarray(feats, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] < 1:
        raise InvalidInputError(f"{path}: need at least one feature column")
    y = np.asarray(labels, dtype=int)
    if y.min() < 0:
        raise InvalidInputError(f"{path}: labels must be nonnegative integers")
    return features, y
