"""Numba-compiled rational-quadratic kernel stack."""

import math

import numpy as np
from numba import njit, prange


@njit(cache=True, fastmath=True, parallel=False)
def rq_stack_impl(preds, scales):
    """Per-point RQ mixture Gram matrices over the sample axis.

    preds: (n, m, c) float64, scales: (s,) float64.  Returns (n, m, m).
    Only the upper triangle is computed; the lower is mirrored so the
    result is exactly symmetric.  k(u, u) = len(scales) by construction.
    """
    n, m, c = preds.shape
    s = scales.shape[0]
    out = np.empty((n, m, m), dtype=np.float64)
    diag = float(s)
    for p in prange(n):
        for i in range(m):
            out[p, i, i] = diag
            for j in range(i + 1, m):
                d2 = 0.0
                for k in range(c):
                    diff = preds[p, i, k] - preds[p, j, k]
                    d2 += diff * diff
                acc = 0.0
                for a in range(s):
                    al = scales[a]
                    acc += math.exp(-al * math.log1p(d2 / (2.0 * al)))
                out[p, i, j] = acc
                out[p, j, i] = acc
    return out
