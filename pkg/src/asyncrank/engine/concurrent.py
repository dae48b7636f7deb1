"""Concurrent execution: one thread per UE plus a monitor thread.

UE threads share nothing; every fragment and report travels through a
transport endpoint.  Each UE loops ``poll -> ingest -> step -> broadcast
-> report`` until STOP arrives or some UE runs out of iterations.
"""
from __future__ import annotations

import logging
import threading
import time

import numpy as np

from ..errors import RankError, TransportError
from ..kernels import GoogleParams
from ..messages import ControlMessage, Fragment, MessageKind
from ..termination import MonitorState, monitor_step, ue_on_check
from ..transport import InProcessNetwork, tcp_cluster
from ..webgraph import AdjacencyGraph, Partition, build_all_blocks
from .core import (
    AsyncResult,
    UEState,
    assemble,
    check_kernel,
    ingest_fragment,
    latest_per_sender,
    ue_step,
)

log = logging.getLogger(__name__)


def make_endpoints(transport: str, ids, base_port: int = 0, send_timeout: float = 1.0,
                   host: str = "127.0.0.1") -> dict:
    if transport == "inproc":
        return dict(InProcessNetwork(ids, send_timeout).endpoints)
    if transport == "tcp":
        return tcp_cluster(ids, host=host, base_port=base_port, send_timeout=send_timeout)
    raise ValueError(f"unknown transport {transport!r}")


def run_concurrent(graph: AdjacencyGraph, params: GoogleParams, partition: Partition,
                   kernel: str = "power", tolerance: float = 1e-6, pc_max: int = 1,
                   pc_max_monitor: int = 1, max_iters: int = 10000, x0=None,
                   transport: str = "inproc", base_port: int = 0,
                   send_timeout: float = 1.0, monitor_poll: float = 1e-4,
                   step_pause: float = 1e-4,
                   timeout: float | None = None) -> AsyncResult:
    """Run the UEs as threads talking through ``transport`` endpoints.

    ``step_pause`` sleeps after every iteration; without it one thread
    tends to hold the interpreter for many iterations, converges locally
    on a view that peers have not yet refreshed, and stops the run early.
    """
    check_kernel(kernel)
    p, n = partition.p, graph.n
    monitor_id = p
    blocks = build_all_blocks(graph, partition)
    if x0 is None:
        x0 = np.full(n, 1.0 / n)
    states = [UEState.create(i, partition, x0, pc_max) for i in range(p)]
    endpoints = make_endpoints(transport, range(p + 1), base_port, send_timeout)

    abort = threading.Event()
    go = threading.Barrier(p + 1)
    errors = {}
    per_ue_time = [None] * p
    exhausted = [False] * p
    got_stop = [False] * p

    def ue_main(i):
        st, ep, block = states[i], endpoints[i], blocks[i]
        try:
            go.wait()
            t0 = time.perf_counter()
            stopped = False
            while not abort.is_set():
                arrived = ep.poll_receive()
                latest, _ = latest_per_sender(m for m in arrived if isinstance(m, Fragment))
                for frag in latest:
                    ingest_fragment(st, frag)
                if any(m.kind is MessageKind.STOP for m in arrived):
                    stopped = True
                frag, residual = ue_step(st, block, params, kernel)
                for j in range(p):
                    if j != i:
                        ep.send_nonblocking(j, frag)
                st.protocol, report = ue_on_check(st.protocol, residual < tolerance,
                                                  sender=i, local_iter=st.local_iter)
                if report is not None:
                    ep.send_nonblocking(monitor_id, report)
                if stopped:
                    got_stop[i] = True
                    break
                if st.local_iter >= max_iters:
                    exhausted[i] = True
                    abort.set()
                    break
                time.sleep(step_pause)
            per_ue_time[i] = time.perf_counter() - t0
        except BaseException as exc:  # surfaced to the caller below
            errors[i] = exc
            abort.set()

    def monitor_main():
        ep = endpoints[monitor_id]
        state = MonitorState.initial(p, pc_max_monitor)
        try:
            go.wait()
            while not abort.is_set():
                msgs = [m for m in ep.poll_receive() if isinstance(m, ControlMessage)]
                state, stop = monitor_step(state, msgs)
                if stop:
                    for i in range(p):
                        ep.send_nonblocking(i, ControlMessage(MessageKind.STOP, monitor_id))
                    ep.flush(send_timeout)
                    return
                time.sleep(monitor_poll)
        except BaseException as exc:
            errors[monitor_id] = exc
            abort.set()

    threads = [threading.Thread(target=ue_main, args=(i,), name=f"ue-{i}", daemon=True)
               for i in range(p)]
    threads.append(threading.Thread(target=monitor_main, name="monitor", daemon=True))
    try:
        for th in threads:
            th.start()
        deadline = None if timeout is None else time.monotonic() + timeout
        for th in threads:
            th.join(None if deadline is None else max(0.0, deadline - time.monotonic()))
            if th.is_alive():
                abort.set()
                th.join(5.0)
    finally:
        for ep in endpoints.values():
            ep.close()

    if errors:
        ue, exc = min(errors.items())
        if isinstance(exc, RankError):
            raise TransportError(f"run failed: {exc}", ue) from exc
        raise TransportError(f"run failed: {exc!r}", ue) from exc

    x, global_residual = assemble(states, graph, params, kernel)
    elapsed = [t if t is not None else float("nan") for t in per_ue_time]
    return AsyncResult(
        x=x,
        per_ue_iters=[s.local_iter for s in states],
        per_ue_time=elapsed,
        import_matrix=np.array([s.import_counts for s in states], dtype=np.int64),
        global_residual=global_residual,
        converged=all(got_stop),
        kernel=kernel,
    )
