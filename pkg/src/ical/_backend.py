"""Backend selection for the kernel hot loops.

Two implementations of the pairwise kernel routines exist: a numba-compiled
one and a plain numpy one.  Which one runs is decided once at import time:

* ``ICAL_BACKEND=numba``  force the compiled path (ImportError if unavailable)
* ``ICAL_BACKEND=numpy``  force the pure numpy path
* ``ICAL_BACKEND=auto``   (default) use numba when importable, else numpy
"""

from __future__ import annotations

import os

_choice = os.environ.get("ICAL_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ImportError(
        f"ICAL_BACKEND must be one of auto|numba|numpy, got {_choice!r}"
    )

if _choice == "numpy":
    NUMBA_AVAILABLE = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:
        if _choice == "numba":
            raise
        NUMBA_AVAILABLE = False

if NUMBA_AVAILABLE:
    from ._rq_numba import rq_stack_impl
else:
    from ._rq_numpy import rq_stack_impl

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"

__all__ = ["BACKEND", "NUMBA_AVAILABLE", "rq_stack_impl"]
