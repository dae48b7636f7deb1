"""Pure numpy fallback for the compiled kernels.

``np.bincount`` with weights accumulates in input order, which matches the
sequential per-row loop of the compiled version bit for bit.
"""
import numpy as np


def csr_matvec(indptr, indices, data, x, out, row_ids=None):
    nrows = indptr.shape[0] - 1
    if row_ids is None:
        row_ids = np.repeat(np.arange(nrows), np.diff(indptr))
    if data.size == 0:
        out[:] = 0.0
        return out
    out[:] = np.bincount(row_ids, weights=data * x[indices], minlength=nrows)
    return out

