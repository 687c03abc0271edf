"""Pure numpy rational-quadratic kernel stack (fallback backend)."""

import numpy as np


def rq_stack_impl(preds, scales):
    """Per-point RQ mixture Gram matrices over the sample axis.

    Same contract as the compiled version: preds (n, m, c), scales (s,),
    returns (n, m, m) float64 with an exactly symmetric result and
    k(u, u) = len(scales) on the diagonal.
    """
    n, m, _ = preds.shape
    # squared distances via broadcasting, one point at a time keeps peak
    # memory at O(m^2 c) instead of O(n m^2 c)
    out = np.empty((n, m, m), dtype=np.float64)
    iu = np.triu_indices(m, k=1)
    for p in range(n):
        diff = preds[p, :, None, :] - preds[p, None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)[iu]
        acc = np.zeros_like(d2)
        for al in scales:
            acc += np.exp(-al * np.log1p(d2 / (2.0 * al)))
        g = np.full((m, m), float(len(scales)))
        g[iu] = acc
        g.T[iu] = acc
        out[p] = g
    return out
