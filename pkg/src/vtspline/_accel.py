"""Numba detection and the environment switch for the pure-numpy fallback.

Set ``VTSPLINE_DISABLE_NUMBA=1`` before import to force the numpy kernels.
"""

from __future__ import annotations

import os

_FLAG = "VTSPLINE_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba as _numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and _numba_requested()


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise.

    The decorated function is compiled whenever numba is importable, even if
    the fallback is selected, so benchmarks can compare both paths.
    """
    kwargs.setdefault("cache", True)
    if _numba is None:  # pragma: no cover
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
