# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sparse kernels.

Row sums accumulate sequentially in stored (ascending column) order so the
result is bitwise identical to the numpy fallback.
"""
from numpy cimport int64_t

import numpy as np


def csr_matvec(const int64_t[::1] indptr, const int64_t[::1] indices,
               const double[::1] data, const double[::1] x, double[::1] out):
    cdef Py_ssize_t nrows = indptr.shape[0] - 1
    cdef Py_ssize_t r, k
    cdef double s
    with nogil:
        for r in range(nrows):
            s = 0.0
            for k in range(indptr[r], indptr[r + 1]):
                s = s + data[k] * x[indices[k]]
            out[r] = s
    return np.asarray(out)

