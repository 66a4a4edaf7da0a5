"""Numba toggle.

Kernels are written once in plain Python over numpy arrays and compiled with
``numba.njit`` when available. Set ``GRIDSHARE_DISABLE_NUMBA=1`` to force the
pure Python/numpy path (useful for debugging and for the benchmark).
"""
import os

_flag = os.environ.get("GRIDSHARE_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError
    import numba
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def jit(func):
    """Compile ``func`` in nopython mode, or return it unchanged."""
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend():
    return "numba" if HAS_NUMBA else "python"
