"""Backend selection for the compiled kernels.

Set ``NLPRENDER_BACKEND=numpy`` to force the pure-numpy code paths even when
numba is importable. Any other value (or unset) uses numba when available.
"""

import os

_requested = os.environ.get("NLPRENDER_BACKEND", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError("numba disabled by NLPRENDER_BACKEND")
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"


def njit(func):
    """Compile ``func`` with numba in nopython mode, or return it unchanged."""
    if NUMBA_AVAILABLE:
        return _njit(cache=True, nogil=True)(func)
    return func
