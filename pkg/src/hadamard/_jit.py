"""Optional numba acceleration.

Set ``HADAMARD_DISABLE_JIT=1`` to run every kernel as plain Python/numpy.
The flag is read once, at import time.
"""

import os

DISABLE_JIT = os.environ.get("HADAMARD_DISABLE_JIT", "").strip().lower() not in ("", "0", "false", "no")

try:
    if DISABLE_JIT:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available and enabled, otherwise a no-op decorator.

    The undecorated function stays reachable as ``.py_func`` in both cases,
    so benchmarks and tests can run the fallback path side by side.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(func):
        func.py_func = func
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return wrap(args[0])
    return wrap


def backend_name():
    return "numba" if HAVE_NUMBA else "python"
