"""Entry point dispatching asynchronous runs to an execution mode."""
from __future__ import annotations

from ..errors import ParameterError
from ..kernels import GoogleParams
from ..webgraph import AdjacencyGraph, Partition
from .concurrent import run_concurrent
from .core import AsyncResult, Schedule
from .simulate import simulate_deterministic

EXEC_MODES = ("sim", "threads", "tcp")


def run_async(graph: AdjacencyGraph, params: GoogleParams, partition: Partition,
              kernel: str = "power", schedule: Schedule | None = None,
              tolerance: float = 1e-6, pc_max: int = 1, max_iters: int = 10000,
              pc_max_monitor: int | None = None, execution: str = "sim", x0=None,
              **options) -> AsyncResult:
    """Run ``partition.p`` computing UEs plus a monitor until STOP.

    ``execution="sim"`` replays ``schedule`` in virtual time; ``"threads"``
    and ``"tcp"`` run real threads over in-process or TCP transports, in
    which case ``schedule`` must be omitted.  The monitor's persistence
    threshold defaults to the UEs'.
    """
    if pc_max_monitor is None:
        pc_max_monitor = pc_max
    common = dict(kernel=kernel, tolerance=tolerance, pc_max=pc_max,
                  pc_max_monitor=pc_max_monitor, max_iters=max_iters, x0=x0)
    if execution == "sim":
        return simulate_deterministic(graph, params, partition, schedule=schedule,
                                      **common, **options)
    if execution in ("threads", "tcp"):
        if schedule is not None:
            raise ParameterError("schedules apply only to simulated runs")
        transport = "inproc" if execution == "threads" else "tcp"
        return run_concurrent(graph, params, partition, transport=transport,
                              **common, **options)
    raise ParameterError(f"unknown execution mode {execution!r}; expected one of {EXEC_MODES}")
