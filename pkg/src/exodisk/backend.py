"""Kernel backend selection.

The hot path of every solve in this package is a batch of independent
complex tridiagonal systems (one per Fourier mode).  A Cython extension
provides the fast implementation; when it is not built the vectorized
NumPy version is used with identical semantics.  The choice is made once
at import time and reported by :func:`backend_name`.
"""

from __future__ import annotations

import numpy as np

from . import _tridiag_np

try:  # pragma: no cover - depends on the build environment
    from . import _kernels

    _IMPL = _kernels
    _NAME = "cython"
except ImportError:  # pragma: no cover
    _IMPL = None
    _NAME = "numpy"

__all__ = ["solve_tridiagonal", "backend_name", "HAVE_EXTENSION"]

HAVE_EXTENSION = _IMPL is not None


def backend_name() -> str:
    """Which tridiagonal kernel is active: 'cython' or 'numpy'."""
    return _NAME


def solve_tridiagonal(lo, di, up, rhs, force: str | None = None) -> np.ndarray:
    """Solve one or many tridiagonal systems.

    Arguments may be 1-D (a single system of size N) or 2-D with shape
    (M, N) for M independent systems; ``lo[..., 0]`` and ``up[..., -1]``
    are ignored.  ``force`` pins the implementation ('numpy' or
    'cython'), which the benchmark and the backend-agreement tests use.
    """
    lo = np.ascontiguousarray(lo, dtype=complex)
    di = np.ascontiguousarray(di, dtype=complex)
    up = np.ascontiguousarray(up, dtype=complex)
    rhs = np.ascontiguousarray(rhs, dtype=complex)
    single = di.ndim == 1
    if single:
        lo, di, up, rhs = (a[None, :] for a in (lo, di, up, rhs))
    if di.shape != lo.shape or di.shape != up.shape or di.shape != rhs.shape:
        raise ValueError("lo, di, up, rhs must share one shape")

    impl = force or _NAME
    if impl == "cython":
        if _IMPL is None:
            raise RuntimeError("cython kernel requested but the extension is not built")
        x = _IMPL.solve_batch(lo, di, up, rhs)
    elif impl == "numpy":
        x = _tridiag_np.solve_batch(lo, di, up, rhs)
    else:
        raise ValueError(f"unknown backend {impl!r}")
    return x[0] if single else x
