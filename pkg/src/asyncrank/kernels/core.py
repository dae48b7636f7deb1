"""Google-operator application, synchronous iteration and a dense oracle."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DegenerateInputError, ParameterError, ShapeError, SizeError
from ..webgraph import AdjacencyGraph, TransitionBlock, build_transition_block, partition_rows
from . import _backend

ORACLE_MAX_N = 2000
KERNELS = ("power", "linear")


@dataclass(frozen=True, eq=False)
class GoogleParams:
    """Damping factor ``alpha`` and teleportation distribution ``v``.

    ``v=None`` means the uniform distribution over ``n`` pages.
    """

    n: int
    alpha: float = 0.85
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if self.v is None:
            v = np.full(self.n, 1.0 / self.n)
        else:
            v = np.array(self.v, dtype=np.float64)
            if v.shape != (self.n,):
                raise ShapeError(f"v has shape {v.shape}, expected ({self.n},)")
            if (v < 0).any():
                raise ParameterError("teleportation vector has negative entries")
            if abs(v.sum() - 1.0) > 1e-12:
                raise ParameterError(f"teleportation vector sums to {v.sum()!r}, not 1")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)


@dataclass
class SyncResult:
    x: np.ndarray
    iterations: int
    residual_history: list
    wall_time: float
    converged: bool
    iterates: Optional[list] = field(default=None, repr=False)


def _check_block(block: TransitionBlock, x: np.ndarray, params: GoogleParams):
    if x.ndim != 1 or x.shape[0] != block.n:
        raise ShapeError(f"x has shape {x.shape}, block expects ({block.n},)")
    if params.n != block.n:
        raise ShapeError(f"params have n={params.n}, block has n={block.n}")


def _block_terms(block, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    s = np.empty(block.nrows)
    _backend.csr_matvec(block.indptr, block.indices, block.data, x, s, block.row_ids)
    dangling_mass = x[block.dangling].sum()
    return x, s, dangling_mass


def apply_google_block(block: TransitionBlock, x, params: GoogleParams) -> np.ndarray:
    """Rows of ``G x`` owned by ``block``.

    Computed as ``alpha*P^T x + alpha*(d.x)/n + (1-alpha)*(e.x)*v``
    without forming ``S`` or ``G``.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_block(block, x, params)
    x, s, dmass = _block_terms(block, x)
    a = params.alpha
    v = params.v[block.row_start:block.row_stop]
    return a * s + a * dmass / block.n + (1.0 - a) * x.sum() * v


def apply_linear_block(block: TransitionBlock, x, params: GoogleParams) -> np.ndarray:
    """Rows of ``R x + b`` owned by ``block``."""
    x = np.asarray(x, dtype=np.float64)
    _check_block(block, x, params)
    x, s, dmass = _block_terms(block, x)
    a = params.alpha
    v = params.v[block.row_start:block.row_stop]
    return a * s + a * dmass / block.n + (1.0 - a) * v


def apply_block(block, x, params, kernel: str = "power") -> np.ndarray:
    if kernel == "power":
        return apply_google_block(block, x, params)
    if kernel == "linear":
        return apply_linear_block(block, x, params)
    raise ParameterError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def full_block(graph: AdjacencyGraph) -> TransitionBlock:
    return build_transition_block(graph, partition_rows(graph.n, 1), 0)


def apply_google(graph: AdjacencyGraph, x, params: GoogleParams) -> np.ndarray:
    return apply_google_block(full_block(graph), x, params)


def residual_l1(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def renormalize(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    norm = np.abs(x).sum()
    if not norm > 0:
        raise DegenerateInputError("cannot renormalize a zero vector")
    return x / norm


def run_sync(graph: AdjacencyGraph, params: GoogleParams, tolerance: float,
             max_iters: int = 10000, x0=None, kernel: str = "power",
             record_iterates: bool = False) -> SyncResult:
    """Iterate ``x <- G x`` (or ``x <- R x + b``) until the 1-norm change
    between successive iterates drops below ``tolerance``.

    No per-step normalization is applied.
    """
    if not tolerance > 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")
    if kernel not in KERNELS:
        raise ParameterError(f"unknown kernel {kernel!r}")
    if params.n != graph.n:
        raise ShapeError(f"params have n={params.n}, graph has n={graph.n}")
    block = full_block(graph)
    if x0 is None:
        x = np.full(graph.n, 1.0 / graph.n)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != (graph.n,):
            raise ShapeError(f"x0 has shape {x.shape}, expected ({graph.n},)")
    iterates = [x.copy()] if record_iterates else None

    history = []
    converged = False
    start = time.perf_counter()
    for _ in range(max_iters):
        x_new = apply_block(block, x, params, kernel)
        r = residual_l1(x_new, x)
        history.append(r)
        x = x_new
        if record_iterates:
            iterates.append(x.copy())
        if r < tolerance:
            converged = True
            break
    wall = time.perf_counter() - start
    return SyncResult(x=x, iterations=len(history), residual_history=history,
                      wall_time=wall, converged=converged, iterates=iterates)


def dense_matrices(graph: AdjacencyGraph, params: GoogleParams):
    """Dense ``R = alpha*S`` and ``b = (1-alpha)*v``, built straight from
    the edge list."""
    n = graph.n
    if n > ORACLE_MAX_N:
        raise SizeError(f"dense oracle limited to n <= {ORACLE_MAX_N}, got {n}")
    S = np.zeros((n, n))
    deg = graph.out_degree
    for i in range(n):
        if deg[i] == 0:
            S[:, i] = 1.0 / n
        else:
            for j in graph.neighbors(i):
                S[j, i] = 1.0 / deg[i]
    return params.alpha * S, (1.0 - params.alpha) * params.v


def dense_oracle(graph: AdjacencyGraph, params: GoogleParams,
                 tolerance: float = 1e-10) -> np.ndarray:
    """Solve ``(I - R) x = b`` by direct elimination.

    Raises if the solved system's residual exceeds ``tolerance``.
    """
    R, b = dense_matrices(graph, params)
    A = np.eye(graph.n) - R
    x = np.linalg.solve(A, b)
    resid = np.abs(A @ x - b).sum()
    if resid > tolerance:
        raise DegenerateInputError(f"direct solve residual {resid:.3e} exceeds {tolerance:.1e}")
    return x


def format_rank_vector(x) -> str:
    """One value per line with 17 significant digits (exact round-trip)."""
    return "".join(f"{v:.17g}\n" for v in np.asarray(x, dtype=np.float64).tolist())


def parse_rank_vector(text: str) -> np.ndarray:
    values = [float(line) for line in text.split("\n") if line.strip()]
    return np.array(values, dtype=np.float64)
