"""Vectorized NumPy fallback for the batched tridiagonal kernel.

The Thomas recurrence is sequential in the node index, so this version
loops over nodes while vectorizing across the independent systems (one
per Fourier mode).  The Cython extension in ``_kernels.pyx`` implements
the same contract with explicit loops.
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_batch"]


def solve_batch(lo: np.ndarray, di: np.ndarray, up: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve M tridiagonal systems of size N.

    All arguments have shape (M, N); ``lo[:, 0]`` and ``up[:, -1]`` are
    ignored.  Returns the solution array of shape (M, N).
    """
    M, N = di.shape
    cp = np.empty((M, N), dtype=complex)
    dp = np.empty((M, N), dtype=complex)
    x = np.empty((M, N), dtype=complex)

    inv = 1.0 / di[:, 0]
    cp[:, 0] = up[:, 0] * inv
    dp[:, 0] = rhs[:, 0] * inv
    for j in range(1, N):
        denom = di[:, j] - lo[:, j] * cp[:, j - 1]
        inv = 1.0 / denom
        cp[:, j] = up[:, j] * inv
        dp[:, j] = (rhs[:, j] - lo[:, j] * dp[:, j - 1]) * inv

    x[:, N - 1] = dp[:, N - 1]
    for j in range(N - 2, -1, -1):
        x[:, j] = dp[:, j] - cp[:, j] * x[:, j + 1]
    return x
