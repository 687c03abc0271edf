"""Joint dependence estimation across d variables from Gram matrices.

Given one Gram matrix per variable, all evaluated on the same m joint
draws, the biased V-statistic estimate of joint dependence is

    t1: (1/m^2)      sum_a sum_b  prod_j K_ab^j
    t2: (2/m^(d+1))  sum_a        prod_j sum_b K_ab^j
    t3: (1/m^(2d))   prod_j       sum_a sum_b K_ab^j

    value = t1 - t2 + t3

For d = 2 this reduces to the familiar centered cross-covariance trace,
implemented separately in :func:`hsic2` because the two-variable case is
the inner loop of batch scoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_NEG_CLAMP = -1e-10


@dataclass(frozen=True)
class DhsicStatistic:
    """Value of the dependence statistic plus the context it came from."""

    value: float
    n_variables: int
    n_samples: int
    degenerate: bool = False


def _check_gram(K: np.ndarray, name: str = "kernel") -> np.ndarray:
    arr = np.asarray(K, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or inf")
    return arr


def _clamp(value: float) -> float:
    # biased V-statistics of PSD kernels are analytically nonnegative;
    # tiny negative values are floating point residue
    if _NEG_CLAMP < value < 0.0:
        return 0.0
    return value


def dhsic(kernels) -> DhsicStatistic:
    """Dependence across ``len(kernels)`` variables.

    Parameters
    ----------
    kernels : sequence of (m, m) arrays
        One Gram matrix per variable, same sample set for all.

    Returns
    -------
    DhsicStatistic
        ``degenerate=True`` with value 0.0 when m < 2 * d, where the
        V-statistic is not meaningful.
    """
    d = len(kernels)
    if d < 2:
        raise InvalidInputError(f"need at least 2 variables, got {d}")
    mats = [_check_gram(K, f"kernel {j}") for j, K in enumerate(kernels)]
    m = mats[0].shape[0]
    for j, K in enumerate(mats[1:], start=1):
        if K.shape[0] != m:
            raise InvalidInputError(
                f"kernel {j} has size {K.shape[0]}, expected {m}"
            )
    if m < 2 * d:
        return DhsicStatistic(0.0, d, m, degenerate=True)

    prod_entry = np.ones((m, m))
    prod_rows = np.ones(m)
    prod_grand = 1.0
    for K in mats:
        prod_entry *= K
        rows = K.sum(axis=1)
        prod_rows *= rows
        prod_grand *= rows.sum()
    fm = float(m)
    t1 = prod_entry.sum() / fm**2
    t2 = 2.0 * prod_rows.sum() / fm ** (d + 1)
    t3 = prod_grand / fm ** (2 * d)
    return DhsicStatistic(_clamp(t1 - t2 + t3), d, m, degenerate=False)


def center_kernel(K: np.ndarray) -> np.ndarray:
    """Double centering H K H with H = I - (1/m) 11^T."""
    arr = _check_gram(K)
    row = arr.mean(axis=1, keepdims=True)
    col = arr.mean(axis=0, keepdims=True)
    return arr - row - col + arr.mean()


def hsic2(K: np.ndarray, L: np.ndarray) -> DhsicStatistic:
    """Two-variable dependence, (1/m^2) <H K H, L>.

    Agrees with ``dhsic([K, L])`` to floating point resolution but runs a
    single centered inner product, which makes it cheap enough to sit in
    the greedy scoring loop.
    """
    Ka = _check_gram(K, "K")
    La = _check_gram(L, "L")
    if Ka.shape != La.shape:
        raise InvalidInputError(
            f"K and L must share a shape, got {Ka.shape} and {La.shape}"
        )
    m = Ka.shape[0]
    if m < 4:
        return DhsicStatistic(0.0, 2, m, degenerate=True)
    value = float(np.tensordot(center_kernel(Ka), La)) / m**2
    return DhsicStatistic(_clamp(value), 2, m, degenerate=False)


def permutation_pvalue(
    K: np.ndarray,
    L: np.ndarray,
    n_permutations: int = 200,
    seed: int = 0,
) -> float:
    """Permutation test p-value for dependence between two variables.

    The second variable's sample axis is permuted; the p-value uses the
    add-one rule (count + 1) / (n_permutations + 1), so it is never 0.
    """
    if n_permutations < 1:
        raise InvalidInputError("n_permutations must be >= 1")
    Ka = _check_gram(K, "K")
    La = _check_gram(L, "L")
    if Ka.shape != La.shape:
        raise InvalidInputError(
            f"K and L must share a shape, got {Ka.shape} and {La.shape}"
        )
    observed = hsic2(Ka, La).value
    rng = np.random.default_rng(seed)
    m = Ka.shape[0]
    count = 0
    Kc = center_kernel(Ka)
    for _ in range(n_permutations):
        perm = rng.permutation(m)
        value = float(np.tensordot(Kc, La[np.ix_(perm, perm)])) / m**2
        if _clamp(value) >= observed:
            count += 1
    return (count + 1) / (n_permutations + 1)
