"""Backend switch for the compiled kernels.

Set ``HATCHSLICER_NUMBA=0`` to force the pure-numpy code paths (useful for
debugging, coverage, or platforms without numba).
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("HATCHSLICER_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator when numba is missing."""
    kwargs.setdefault("cache", True)
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda f: f


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
