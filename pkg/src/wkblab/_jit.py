"""Optional numba acceleration.

Set ``WKBLAB_DISABLE_JIT=1`` before import to force the pure-numpy kernels.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("WKBLAB_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError("disabled by WKBLAB_DISABLE_JIT")
    from numba import njit as _njit

    JIT_ENABLED = True
except ImportError:
    _njit = None
    JIT_ENABLED = False


def jit_or(fallback):
    """Compile the decorated loop kernel with numba, or return ``fallback`` when unavailable."""

    def wrap(kernel):
        if JIT_ENABLED:
            return _njit(cache=True, fastmath=False)(kernel)
        return fallback

    return wrap


def backend() -> str:
    return "numba" if JIT_ENABLED else "numpy"
