# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched tridiagonal solver (Thomas algorithm).

One system per Fourier mode; systems are independent.  Mirrors the
contract of ``_tridiag_np.solve_batch`` exactly.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def solve_batch(cnp.complex128_t[:, ::1] lo not None,
                cnp.complex128_t[:, ::1] di not None,
                cnp.complex128_t[:, ::1] up not None,
                cnp.complex128_t[:, ::1] rhs not None):
    """Solve M tridiagonal systems of size N; shapes all (M, N)."""
    cdef Py_ssize_t M = di.shape[0]
    cdef Py_ssize_t N = di.shape[1]
    out = np.empty((M, N), dtype=np.complex128)
    cp_arr = np.empty(N, dtype=np.complex128)
    dp_arr = np.empty(N, dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] x = out
    cdef cnp.complex128_t[::1] cp = cp_arr
    cdef cnp.complex128_t[::1] dp = dp_arr
    cdef Py_ssize_t m, j
    cdef double complex denom

    for m in range(M):
        cp[0] = up[m, 0] / di[m, 0]
        dp[0] = rhs[m, 0] / di[m, 0]
        for j in range(1, N):
            denom = di[m, j] - lo[m, j] * cp[j - 1]
            cp[j] = up[m, j] / denom
            dp[j] = (rhs[m, j] - lo[m, j] * dp[j - 1]) / denom
        x[m, N - 1] = dp[N - 1]
        for j in range(N - 2, -1, -1):
            x[m, j] = dp[j] - cp[j] * x[m, j + 1]
    return out
