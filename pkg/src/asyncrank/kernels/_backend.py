"""Select the compiled kernels when available.

Set ``ASYNCRANK_BACKEND=python`` to force the numpy fallback.
"""
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

_forced = os.environ.get("ASYNCRANK_BACKEND", "").strip().lower()

compiled = None
if _forced != "python":
    try:
        from . import _ckernels as compiled
    except ImportError:
        if _forced == "cython":
            raise
        log.debug("compiled kernels unavailable, using numpy fallback")

BACKEND = "cython" if compiled is not None else "python"


def csr_matvec(indptr, indices, data, x, out, row_ids=None):
    if compiled is not None:
        return compiled.csr_matvec(indptr, indices, data, x, out)
    return _pykernels.csr_matvec(indptr, indices, data, x, out, row_ids)
