"""Optional numba acceleration.

Set ``OSR_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is not
installed the numpy path is used automatically.
"""
import os

_flag = os.environ.get("OSR_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in ("1", "true", "yes", "on")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by OSR_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(...) both return the function untouched
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
