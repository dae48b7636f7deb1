"""Web-graph link structure: ingestion, synthesis, partitioning and
transition blocks.

Graphs are stored as compressed sparse rows of out-links.  The
transition blocks handed to the kernels hold rows of the *transposed*
transition structure, i.e. the in-links of each page weighted by the
reciprocal out-degree of the source page.
"""
from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

import numpy as np

from .errors import ParameterError, ParseError, RangeError

__all__ = [
    "AdjacencyGraph",
    "Partition",
    "TransitionBlock",
    "parse_edge_list",
    "read_edge_list",
    "format_edge_list",
    "write_edge_list",
    "generate_synthetic",
    "partition_rows",
    "build_transition_block",
    "build_all_blocks",
]

_NODES_HEADER = re.compile(r"^#\s*nodes\s*[:=]\s*(\d+)", re.IGNORECASE)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AdjacencyGraph:
    """Binary link structure in CSR form.

    Row ``i`` of ``indices[indptr[i]:indptr[i+1]]`` lists the distinct
    out-neighbours of page ``i`` in ascending order.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        _frozen(self.indptr)
        _frozen(self.indices)

    @classmethod
    def from_edges(cls, n: int, src, dst) -> "AdjacencyGraph":
        """Build a graph from parallel source/target arrays.

        Duplicate edges collapse; self-loops are kept.
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ParameterError("source and target arrays differ in length")
        if n < 0:
            raise ParameterError(f"page count must be non-negative, got {n}")
        if src.size:
            lo = min(src.min(), dst.min())
            hi = max(src.max(), dst.max())
            if lo < 0 or hi >= n:
                raise RangeError(f"vertex id out of range [0, {n})")
        keys = np.unique(src * max(n, 1) + dst)
        src = keys // max(n, 1)
        dst = keys % max(n, 1)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n=int(n), indptr=indptr, indices=dst.astype(np.int64))

    @cached_property
    def out_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.indptr))

    @cached_property
    def dangling(self) -> np.ndarray:
        return _frozen(self.out_degree == 0)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(src, dst)`` arrays in ascending ``(src, dst)`` order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.indices.copy()

    @cached_property
    def _transposed(self):
        # rows of P^T: entry (r, c) for every edge c -> r, columns ascending
        src, dst = self.edges()
        order = np.lexsort((src, dst))
        rows, cols = dst[order], src[order]
        weights = 1.0 / self.out_degree[cols].astype(np.float64)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.n), out=indptr[1:])
        return _frozen(indptr), _frozen(cols), _frozen(weights)

    def __eq__(self, other):
        if not isinstance(other, AdjacencyGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None

    def __repr__(self):
        return (f"AdjacencyGraph(n={self.n}, nnz={self.nnz}, "
                f"dangling={int(self.dangling.sum())})")


@dataclass(frozen=True)
class Partition:
    """Contiguous row blocks; UE ``i`` owns ``[bounds[i], bounds[i+1])``."""

    n: int
    p: int
    bounds: tuple

    def block(self, owner: int) -> range:
        if not 0 <= owner < self.p:
            raise ParameterError(f"owner {owner} outside [0, {self.p})")
        return range(self.bounds[owner], self.bounds[owner + 1])

    def sizes(self) -> list[int]:
        return [b - a for a, b in zip(self.bounds[:-1], self.bounds[1:])]

    def owner_of(self, row: int) -> int:
        if not 0 <= row < self.n:
            raise RangeError(f"row {row} outside [0, {self.n})")
        return int(np.searchsorted(self.bounds, row, side="right") - 1)


@dataclass(frozen=True, eq=False)
class TransitionBlock:
    """Rows ``[row_start, row_stop)`` of the transposed transition matrix.

    Entry ``(r, c)`` carries weight ``1/deg(c)`` for each link ``c -> r``.
    ``indptr`` is local to the block; ``indices`` hold global columns.
    Dangling columns store nothing; the kernels apply their rank-one
    correction using ``dangling``.
    """

    owner: int
    row_start: int
    row_stop: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    dangling: np.ndarray
    n: int

    @property
    def row_range(self) -> tuple[int, int]:
        return self.row_start, self.row_stop

    @property
    def nrows(self) -> int:
        return self.row_stop - self.row_start

    @cached_property
    def row_ids(self) -> np.ndarray:
        """Local row index of every stored entry (CSR expanded to COO)."""
        return _frozen(np.repeat(np.arange(self.nrows, dtype=np.int64),
                                 np.diff(self.indptr)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.n))
        out[self.row_ids, self.indices] = self.data
        return out


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, bytes):
        return io.StringIO(source.decode())
    return source


def parse_edge_list(source: Union[str, Iterable[str]], base_index: int = 0,
                    declared_n: Optional[int] = None) -> AdjacencyGraph:
    """Parse ``src dst`` lines into an :class:`AdjacencyGraph`.

    ``source`` is either the full text or an iterable of lines.  Lines
    starting with ``#`` are comments, except that a ``# Nodes: N`` header
    (as written by :func:`format_edge_list` and common public crawl
    snapshots) fixes the page count when ``declared_n`` is not given.
    """
    if base_index not in (0, 1):
        raise ParameterError(f"base_index must be 0 or 1, got {base_index}")
    if declared_n is not None and declared_n < 0:
        raise ParameterError(f"declared_n must be non-negative, got {declared_n}")

    header_n = None
    src, dst = [], []
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _NODES_HEADER.match(line)
            if m and header_n is None:
                header_n = int(m.group(1))
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 fields, got {len(tokens)}", lineno)
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(f"non-integer token in {line!r}", lineno) from None
        a -= base_index
        b -= base_index
        if a < 0 or b < 0:
            raise RangeError(f"line {lineno}: vertex id below base index {base_index}")
        if declared_n is not None and (a >= declared_n or b >= declared_n):
            raise RangeError(
                f"line {lineno}: vertex id {max(a, b) + base_index} "
                f"exceeds declared page count {declared_n}")
        src.append(a)
        dst.append(b)

    seen = 1 + max(max(src), max(dst)) if src else 0
    if declared_n is not None:
        n = declared_n
    elif header_n is not None:
        if header_n < seen:
            raise RangeError(f"'# Nodes: {header_n}' header but ids reach {seen - 1}")
        n = header_n
    else:
        n = seen
    return AdjacencyGraph.from_edges(n, src, dst)


def read_edge_list(path: Union[str, os.PathLike], base_index: int = 0,
                   declared_n: Optional[int] = None) -> AdjacencyGraph:
    with open(path) as fh:
        return parse_edge_list(fh, base_index=base_index, declared_n=declared_n)


def format_edge_list(graph: AdjacencyGraph, comments: bool = True) -> str:
    src, dst = graph.edges()
    lines = []
    if comments:
        lines.append(f"# Nodes: {graph.n} Edges: {graph.nnz}")
    lines.extend(f"{a} {b}" for a, b in zip(src.tolist(), dst.tolist()))
    return "\n".join(lines) + "\n"


def write_edge_list(graph: AdjacencyGraph, path: Union[str, os.PathLike],
                    comments: bool = True) -> None:
    with open(path, "w") as fh:
        fh.write(format_edge_list(graph, comments=comments))


def generate_synthetic(n: int, avg_out_degree: float, dangling_fraction: float,
                       seed: int) -> AdjacencyGraph:
    """Random graph with geometric out-degrees.

    Each page is dangling independently with probability
    ``dangling_fraction``.  Every other page draws an out-degree >= 1
    from a geometric law with mean ``avg_out_degree`` (clipped to ``n``)
    and links to that many distinct uniformly chosen targets.  With
    ``avg_out_degree == 0`` no links are generated at all.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if avg_out_degree < 0:
        raise ParameterError(f"avg_out_degree must be >= 0, got {avg_out_degree}")
    if not 0.0 <= dangling_fraction <= 1.0:
        raise ParameterError(f"dangling_fraction must lie in [0, 1], got {dangling_fraction}")

    rng = np.random.default_rng(seed)
    is_dangling = rng.random(n) < dangling_fraction
    if avg_out_degree == 0:
        return AdjacencyGraph.from_edges(n, [], [])

    p_success = 1.0 / max(avg_out_degree, 1.0)
    degrees = np.minimum(rng.geometric(p_success, size=n), n)
    degrees[is_dangling] = 0

    src = np.repeat(np.arange(n, dtype=np.int64), degrees)
    dst = np.empty(src.size, dtype=np.int64)
    pos = 0
    for page in np.flatnonzero(degrees):
        k = int(degrees[page])
        dst[pos:pos + k] = rng.choice(n, size=k, replace=False)
        pos += k
    return AdjacencyGraph.from_edges(n, src, dst)


def partition_rows(n: int, p: int) -> Partition:
    """Split ``[0, n)`` into ``p`` consecutive blocks, larger ones first."""
    if p < 1 or p > n:
        raise ParameterError(f"need 1 <= p <= n, got p={p}, n={n}")
    q, r = divmod(n, p)
    sizes = [q + 1] * r + [q] * (p - r)
    bounds = [0]
    for s in sizes:
        bounds.append(bounds[-1] + s)
    return Partition(n=n, p=p, bounds=tuple(bounds))


def build_transition_block(graph: AdjacencyGraph, partition: Partition,
                           owner: int) -> TransitionBlock:
    if graph.n != partition.n:
        raise ParameterError(f"graph has n={graph.n}, partition has n={partition.n}")
    rows = partition.block(owner)
    indptr, cols, weights = graph._transposed
    lo, hi = int(indptr[rows.start]), int(indptr[rows.stop])
    return TransitionBlock(
        owner=owner,
        row_start=rows.start,
        row_stop=rows.stop,
        indptr=_frozen(indptr[rows.start:rows.stop + 1] - lo),
        indices=cols[lo:hi],
        data=weights[lo:hi],
        dangling=graph.dangling,
        n=graph.n,
    )


def build_all_blocks(graph: AdjacencyGraph, partition: Partition) -> list[TransitionBlock]:
    return [build_transition_block(graph, partition, i) for i in range(partition.p)]
