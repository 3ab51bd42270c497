"""Selection of the kernel backend.

Set ``DSPCORR_BACKEND=numpy`` to force the pure numpy/scipy kernels, or
``DSPCORR_BACKEND=numba`` (the default when numba imports) for the compiled ones.
"""
from __future__ import annotations

import os
import warnings

BACKEND_ENV = "DSPCORR_BACKEND"
BACKENDS = ("numba", "numpy")


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def backend_name() -> str:
    requested = os.environ.get(BACKEND_ENV, "").strip().lower()
    if requested not in ("",) + BACKENDS:
        raise ValueError(f"{BACKEND_ENV} must be one of {BACKENDS}, got {requested!r}")
    if requested == "numpy":
        return "numpy"
    if numba_available():
        return "numba"
    if requested == "numba":
        warnings.warn("numba requested but not importable; using numpy kernels")
    return "numpy"
