"""Backend selection for the compiled kernels.

Set ``UQAUDIT_BACKEND=numpy`` to force the pure-numpy path; the default is
``numba`` when it imports cleanly.
"""

import os

_ENV_FLAG = "UQAUDIT_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _initial_backend():
    requested = os.environ.get(_ENV_FLAG, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{_ENV_FLAG} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


_backend = _initial_backend()


def backend():
    return _backend


def set_backend(name):
    """Switch backend at runtime (tests and benchmarks). Returns the previous one."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    previous, _backend = _backend, name
    return previous


def njit(func):
    """``numba.njit(cache=True)`` when available, else the function unchanged."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
