"""Rational-quadratic mixture kernels over predictive samples.

The kernel between two sample vectors u, v is a sum of rational-quadratic
components with unit amplitude and unit length scale,

    k(u, v) = sum_a (1 + ||u - v||^2 / (2 a))^(-a)

with one term per mixture exponent a.  Summing over several exponents keeps
the kernel sensitive to differences at several resolutions at once, and a
sum of positive semi-definite kernels stays positive semi-definite, which
the pooling steps downstream rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import rq_stack_impl
from .errors import InvalidInputError

DEFAULT_SCALES = (0.2, 0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class KernelSpec:
    """Configuration of the RQ mixture: the tuple of exponents ``a``."""

    scales: tuple[float, ...] = DEFAULT_SCALES

    def __post_init__(self):
        if len(self.scales) == 0:
            raise InvalidInputError("KernelSpec.scales must be non-empty")
        arr = np.asarray(self.scales, dtype=np.float64)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InvalidInputError(
                f"KernelSpec.scales must be finite and positive, got {self.scales}"
            )

    def scales_array(self) -> np.ndarray:
        return np.asarray(self.scales, dtype=np.float64)


def _check_samples(samples: np.ndarray, min_rows: int) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(
            f"expected a 2-d array of sample vectors, got shape {arr.shape}"
        )
    if arr.shape[0] < min_rows:
        raise InvalidInputError(
            f"need at least {min_rows} sample vectors, got {arr.shape[0]}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("sample vectors contain NaN or inf")
    return arr


def kernel_matrix(samples: np.ndarray, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """Gram matrix of the RQ mixture kernel over rows of ``samples``.

    Parameters
    ----------
    samples : (m, c) array
        One row per draw; typically rows are predictive probability vectors.
    spec : KernelSpec
        Mixture exponents.

    Returns
    -------
    (m, m) float64 array, exactly symmetric, diagonal equal to
    ``len(spec.scales)``, every entry in (0, len(spec.scales)].
    """
    arr = _check_samples(samples, min_rows=2)
    return rq_stack_impl(arr[None, :, :], spec.scales_array())[0]


def kernel_stack(preds: np.ndarray, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """Gram matrices for every point of a prediction tensor.

    ``preds`` has shape (n_points, m, c); the result has shape
    (n_points, m, m) with ``result[i] == kernel_matrix(preds[i], spec)``.
    """
    arr = np.asarray(preds, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInputError(
            f"expected a (n_points, m, c) tensor, got shape {arr.shape}"
        )
    if arr.shape[0] < 1:
        raise InvalidInputError("prediction tensor has no points")
    if arr.shape[1] < 2:
        raise InvalidInputError(
            f"need at least 2 samples per point, got {arr.shape[1]}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("prediction tensor contains NaN or inf")
    return rq_stack_impl(np.ascontiguousarray(arr), spec.scales_array())


def _check_gram_list(kernels) -> np.ndarray:
    if len(kernels) == 0:
        raise InvalidInputError("need at least one kernel matrix")
    mats = [np.asarray(K, dtype=np.float64) for K in kernels]
    shape = mats[0].shape
    for K in mats:
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape != shape:
            raise InvalidInputError(
                "kernel matrices must all be square and share one size"
            )
    return np.stack(mats)


def sum_kernels(kernels) -> np.ndarray:
    """Entrywise sum of Gram matrices (all must share the same shape)."""
    return _check_gram_list(kernels).sum(axis=0)


def mean_kernels(kernels) -> np.ndarray:
    """Entrywise mean of Gram matrices (all must share the same shape)."""
    return _check_gram_list(kernels).mean(axis=0)
