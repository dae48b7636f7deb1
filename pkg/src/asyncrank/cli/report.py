"""Run reports: JSON for machines, fixed-width tables for people."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from ..errors import ParameterError, ShapeError


def ranking(x) -> np.ndarray:
    """Page indices by descending score, ties by ascending index."""
    x = np.asarray(x, dtype=np.float64)
    return np.lexsort((np.arange(x.size), -x))


def top_k(x, k: int) -> list:
    x = np.asarray(x, dtype=np.float64)
    return [[int(i), float(x[i])] for i in ranking(x)[:k]]


def compare_rankings(x, y, k: int) -> dict:
    """Top-``k`` set overlap and the largest rank shift of any page that
    appears in either top-``k`` list."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.shape} vs {y.shape}")
    if not 1 <= k <= x.size:
        raise ParameterError(f"k must lie in [1, {x.size}], got {k}")
    rx, ry = ranking(x), ranking(y)
    pos_x = np.empty(x.size, dtype=np.int64)
    pos_y = np.empty(y.size, dtype=np.int64)
    pos_x[rx] = np.arange(x.size)
    pos_y[ry] = np.arange(y.size)
    tx, ty = set(rx[:k].tolist()), set(ry[:k].tolist())
    pages = np.array(sorted(tx | ty), dtype=np.int64)
    return {
        "k": k,
        "overlap": len(tx & ty) / k,
        "max_displacement": int(np.abs(pos_x[pages] - pos_y[pages]).max()),
    }


@dataclass
class RunReport:
    config: dict
    mode: str
    kernel: str
    n: int
    p: int
    converged: bool
    wall_time: float
    global_residual: float
    x: list
    top_k: list
    iterations: Optional[int] = None
    per_ue_iters: Optional[list] = None
    per_ue_time: Optional[list] = None
    iters_min: Optional[int] = None
    iters_max: Optional[int] = None
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    import_matrix: Optional[list] = None
    completed_imports_pct: Optional[list] = None
    oracle_error: Optional[float] = None
    sync_iterations: Optional[int] = None
    sync_time: Optional[float] = None
    speedup: Optional[float] = None
    backend: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def summary(self) -> str:
        lines = [f"mode={self.mode} kernel={self.kernel} n={self.n} p={self.p} "
                 f"converged={self.converged} backend={self.backend}"]
        if self.mode == "sync":
            lines += [
                f"{'procs':>5} | {'iters':>6} | {'t (sec)':>10}",
                f"{self.p:>5} | {self.iterations:>6} | {self.wall_time:>10.4f}",
            ]
        else:
            sync_it = "-" if self.sync_iterations is None else str(self.sync_iterations)
            sync_t = "-" if self.sync_time is None else f"{self.sync_time:.4f}"
            speed = "-" if self.speedup is None else f"{self.speedup:.2f}"
            lines += [
                f"{'procs':>5} | {'sync iters':>10} | {'sync t':>10} | "
                f"{'[iters_min, iters_max]':>22} | {'[t_min, t_max] (sec)':>22} | {'speedup':>7}",
                f"{self.p:>5} | {sync_it:>10} | {sync_t:>10} | "
                f"{f'[{self.iters_min}, {self.iters_max}]':>22} | "
                f"{f'[{self.t_min:.4f}, {self.t_max:.4f}]':>22} | {speed:>7}",
                "",
                imports_table(self.import_matrix, self.completed_imports_pct),
            ]
        lines.append(f"global residual ||x - Gx||_1 = {self.global_residual:.3e}")
        if self.oracle_error is not None:
            lines.append(f"oracle error ||x - x*||_1 = {self.oracle_error:.3e}")
        lines.append("top pages: " + ", ".join(f"{i} ({s:.6g})" for i, s in self.top_k))
        return "\n".join(lines)


def imports_table(matrix, pct) -> str:
    p = len(matrix)
    head = f"{'Receiver':>8} | " + " | ".join(f"{f'id={j}':>6}" for j in range(p)) \
        + " | Completed Imports (%)"
    rows = [head]
    for i in range(p):
        rows.append(f"{f'id={i}':>8} | " + " | ".join(f"{matrix[i][j]:>6}" for j in range(p))
                    + f" | {pct[i]:>6.1f}")
    return "\n".join(rows)
