"""Kernel backend selection.

The hot loops (rotation sweeps and their adjoint) are written as scalar
loops compiled with numba.  Setting ``STIEFEL_GIVENS_BACKEND=numpy`` (or
running without numba installed) switches to the row-vectorised numpy
versions in :mod:`stiefel_givens._kernels_numpy`.
"""

import os

BACKEND_ENV = "STIEFEL_GIVENS_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAS_NUMBA = False


def requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAS_NUMBA:
        return "numpy"
    return value


BACKEND = requested_backend()

if BACKEND == "numba":
    from . import _kernels_numba as kernels
else:
    from . import _kernels_numpy as kernels

__all__ = ["BACKEND", "BACKEND_ENV", "HAS_NUMBA", "kernels"]
