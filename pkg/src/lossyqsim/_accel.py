"""Backend selection for the hot kernels.

Set ``LOSSYQSIM_DISABLE_NUMBA=1`` to force the pure-numpy path.  The choice
is made once, at import time.
"""

from __future__ import annotations

import os

DISABLE_ENV = "LOSSYQSIM_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get(DISABLE_ENV, "").lower() not in (
    "1",
    "true",
    "yes",
)


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, else ``None``."""
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
