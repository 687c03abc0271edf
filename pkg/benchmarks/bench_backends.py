"""Compare the compiled and pure-numpy kernel stack implementations.

The per-point Gram stack is the hot path of every greedy scoring round,
so this times both backends over a sweep of pool shapes and prints the
speedup.  Run as a script:

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --shapes 500x16x4,2000x32x4 --repeats 5
"""

import argparse
import time

import numpy as np

from ical._rq_numpy import rq_stack_impl as numpy_impl
from ical.kernels import DEFAULT_SCALES

try:
    from ical._rq_numba import rq_stack_impl as numba_impl
except ImportError:
    numba_impl = None

DEFAULT_SHAPES = "200x16x4,500x32x4,1000x32x4,2000x32x4"


def parse_shapes(text):
    shapes = []
    for part in text.split(","):
        n, m, c = (int(v) for v in part.split("x"))
        shapes.append((n, m, c))
    return shapes


def median_seconds(fn, preds, scales, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(preds, scales)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--shapes", default=DEFAULT_SHAPES,
                        help="comma list of NxMxC pool shapes")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    scales = np.asarray(DEFAULT_SCALES)
    rng = np.random.default_rng(0)
    if numba_impl is not None:
        numba_impl(rng.dirichlet(np.ones(3), size=(4, 6)), scales)  # compile once

    print(f"{'shape':>14} {'numpy':>11} {'numba':>11} {'speedup':>8}")
    for n, m, c in parse_shapes(args.shapes):
        shape = f"{n}x{m}x{c}"
        preds = rng.dirichlet(np.ones(c), size=(n, m))
        t_np = median_seconds(numpy_impl, preds, scales, args.repeats)
        if numba_impl is None:
            print(f"{shape:>14} {t_np * 1e3:>9.1f}ms {'n/a':>11} {'n/a':>8}")
            continue
        t_nb = median_seconds(numba_impl, preds, scales, args.repeats)
        print(
            f"{shape:>14} {t_np * 1e3:>9.1f}ms {t_nb * 1e3:>9.1f}ms "
            f"{t_np / t_nb:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
