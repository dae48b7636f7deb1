"""Numerical core: the Google operator, synchronous iteration, oracle."""
from ._backend import BACKEND
from .core import (
    KERNELS,
    ORACLE_MAX_N,
    GoogleParams,
    SyncResult,
    apply_block,
    apply_google,
    apply_google_block,
    apply_linear_block,
    dense_matrices,
    dense_oracle,
    format_rank_vector,
    full_block,
    parse_rank_vector,
    renormalize,
    residual_l1,
    run_sync,
)

__all__ = [
    "BACKEND", "KERNELS", "ORACLE_MAX_N", "GoogleParams", "SyncResult",
    "apply_block", "apply_google", "apply_google_block", "apply_linear_block",
    "dense_matrices", "dense_oracle", "format_rank_vector", "full_block",
    "parse_rank_vector", "renormalize",
    "residual_l1", "run_sync",
]
