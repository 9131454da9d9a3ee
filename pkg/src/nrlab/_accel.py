"""Numba switch.

Hot kernels come in two flavours: an ``@njit`` loop version and a vectorized
numpy version.  Set ``NRLAB_DISABLE_NUMBA=1`` to force the numpy path (also
used automatically when numba cannot be imported).
"""

import os

_DISABLED = os.environ.get("NRLAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by NRLAB_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(cache=True, ...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn
        return wrap


def use_numba() -> bool:
    return HAVE_NUMBA
