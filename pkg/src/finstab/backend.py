"""Numba/numpy backend selection for the hot integration kernels.

The same kernel source is compiled with numba when available and allowed,
or run as plain numpy/Python otherwise.  Set FINSTAB_NUMBA=0 to force the
pure-numpy path (useful for debugging and for the backend benchmark).
"""
from __future__ import annotations

import os


def _numba_requested() -> bool:
    return os.environ.get("FINSTAB_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


try:
    import numba  # type: ignore

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    numba = None
    _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA and _numba_requested()


def maybe_njit(fn):
    """Apply numba.njit when the numba backend is active, else return fn unchanged."""
    if USING_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn
