"""Single-threaded virtual-time replay of an asynchronous run.

Time advances in ticks.  In each tick the monitor first runs one
iteration over the reports that have become due, then the active UEs
step in id order.  A message sent during tick ``t`` with delay ``d``
becomes available at tick ``t + 1 + d``, so zero delay everywhere
reproduces the synchronous iteration exactly.

Which UEs step in a tick, and the delay or loss of every fragment, come
from the :class:`Schedule`:

* ``lockstep`` -- every UE steps every tick, nothing is delayed;
* ``seeded-random`` -- every UE steps every tick; each fragment gets a
  delay drawn uniformly from ``[0, delay_bound]`` and is lost with
  probability ``drop_rate``, never twice in a row on the same link, so
  staleness stays within ``delay_bound + 1``; control messages get a
  random delay but are never lost or reordered;
* ``scripted`` -- each tick lists explicit :class:`Step` activations.
"""
from __future__ import annotations

import time

import numpy as np

from ..errors import ScriptError, TransportError
from ..kernels import GoogleParams
from ..messages import ControlMessage, MessageKind
from ..termination import MonitorState, monitor_step, ue_on_check
from ..webgraph import AdjacencyGraph, Partition, build_all_blocks
from .core import (
    AsyncResult,
    Schedule,
    Step,
    StepRecord,
    TraceEvent,
    UEState,
    assemble,
    check_kernel,
    ingest_fragment,
    latest_per_sender,
    ue_step,
)


class DirectWire:
    """Hands message objects over untouched."""

    def transmit(self, src, dst, msg):
        return msg


class EndpointWire:
    """Routes every message through real transport endpoints.

    Each message is flushed and collected at the receiver before the
    replay continues, so the order seen by the engine is the same as with
    :class:`DirectWire`.
    """

    def __init__(self, endpoints, timeout: float = 5.0):
        self.endpoints = endpoints
        self.timeout = timeout

    def transmit(self, src, dst, msg):
        self.endpoints[src].send_nonblocking(dst, msg)
        self.endpoints[src].flush(self.timeout)
        deadline = time.monotonic() + self.timeout
        while True:
            got = self.endpoints[dst].poll_receive()
            if got:
                if len(got) != 1:
                    raise TransportError(f"expected one message, got {len(got)}", dst)
                return got[0]
            if time.monotonic() > deadline:
                raise TransportError(f"message from {src} never arrived", dst)
            time.sleep(0.0005)


_ZERO = 0.0


def simulate_deterministic(graph: AdjacencyGraph, params: GoogleParams, partition: Partition,
                           kernel: str = "power", schedule: Schedule | None = None,
                           tolerance: float = 1e-6, pc_max: int = 1,
                           pc_max_monitor: int = 1, max_iters: int = 10000, x0=None,
                           script=None, wire=None, record_trace: bool = True,
                           record_iterates: bool = False) -> AsyncResult:
    """Replay an asynchronous run in virtual time.

    ``script`` is shorthand for ``Schedule.scripted(script)``.  ``wire``
    may route messages through transport endpoints (see
    :class:`EndpointWire`); the result must not depend on it.
    """
    check_kernel(kernel)
    if script is not None:
        if schedule is not None:
            raise ScriptError("give either a schedule or a script, not both")
        schedule = Schedule.scripted(script)
    schedule = schedule or Schedule.lockstep()
    if not tolerance > 0:
        raise ScriptError(f"tolerance must be positive, got {tolerance}")
    p, n = partition.p, graph.n
    monitor_id = p
    if schedule.mode == "scripted":
        for k, tick in enumerate(schedule.script):
            for s in tick:
                if not 0 <= s.ue < p:
                    raise ScriptError(f"tick {k}: UE id {s.ue} outside [0, {p})")
                bad = [j for j in s.drop if not 0 <= j < p]
                if bad or (isinstance(s.delay, dict) and any(d < 0 for d in s.delay.values())) \
                        or (not isinstance(s.delay, dict) and s.delay < 0):
                    raise ScriptError(f"tick {k}: invalid delay/drop in {s!r}")

    wire = wire or DirectWire()
    blocks = build_all_blocks(graph, partition)
    if x0 is None:
        x0 = np.full(n, 1.0 / n)
    states = [UEState.create(i, partition, x0, pc_max) for i in range(p)]
    monitor = MonitorState.initial(p, pc_max_monitor)
    rng = np.random.default_rng(schedule.seed) if schedule.mode == "seeded-random" else None

    inbox = [[] for _ in range(p)]      # (due, seq, fragment)
    reports = []                        # (due, seq, control message)
    stop_due = [None] * p
    halted = [False] * p
    halt_time = [None] * p
    last_dropped = {}
    seq = 0
    trace = [] if record_trace else None
    steps = [] if record_trace else None
    iterates = [[s.own.copy()] for s in states] if record_iterates else None

    def emit(*fields):
        if trace is not None:
            trace.append(TraceEvent(*fields))

    def link_delay(step, src, dst):
        """(delay, dropped) for the fragment src -> dst."""
        if schedule.mode == "lockstep":
            return 0, False
        if schedule.mode == "scripted":
            return step.delay_to(dst), dst in step.drop
        delay = int(rng.integers(0, schedule.delay_bound + 1))
        dropped = bool(rng.random() < schedule.drop_rate)
        if dropped and last_dropped.get((src, dst)):
            dropped = False
        last_dropped[(src, dst)] = dropped
        return delay, dropped

    last_control_due = {}

    def control_due(src, dst):
        # control links stay FIFO whatever the drawn delay
        delay = 0
        if schedule.mode == "seeded-random":
            delay = int(rng.integers(0, schedule.delay_bound + 1))
        due = max(t + 1 + delay, last_control_due.get((src, dst), 0))
        last_control_due[(src, dst)] = due
        return due

    start = time.perf_counter()
    exhausted = False
    t = 0
    while True:
        if schedule.mode == "scripted":
            if t >= len(schedule.script) and not schedule.cycle:
                break
            active = schedule.script[t % len(schedule.script)]
        else:
            active = [Step(i) for i in range(p)]

        if not monitor.stopped:
            due = sorted(r for r in reports if r[0] <= t)
            reports = [r for r in reports if r[0] > t]
            msgs = [r[2] for r in due]
            for m in msgs:
                emit(t, monitor_id, "recv-" + m.kind.name.lower(), m.sender, m.local_iter, _ZERO)
            monitor, stop = monitor_step(monitor, msgs)
            if stop:
                for i in range(p):
                    msg = wire.transmit(monitor_id, i, ControlMessage(MessageKind.STOP, monitor_id))
                    assert msg.kind is MessageKind.STOP
                    stop_due[i] = control_due(monitor_id, i)
                    emit(t, monitor_id, "stop", i, 0, _ZERO)

        for step in active:
            i = step.ue
            if halted[i]:
                continue
            st = states[i]
            ready = sorted(e for e in inbox[i] if e[0] <= t)
            inbox[i] = [e for e in inbox[i] if e[0] > t]
            latest, superseded = latest_per_sender(e[2] for e in ready)
            for frag in superseded:
                emit(t, i, "superseded", frag.sender, frag.local_iter, _ZERO)
            for frag in latest:
                ok = ingest_fragment(st, frag)
                emit(t, i, "recv" if ok else "stale", frag.sender, frag.local_iter, _ZERO)

            t_local, tau = st.local_iter, st.tau()
            frag, residual = ue_step(st, blocks[i], params, kernel)
            if steps is not None:
                steps.append(StepRecord(t, i, t_local, tau, residual))
            emit(t, i, "step", -1, st.local_iter, residual)
            if iterates is not None:
                iterates[i].append(frag.values.copy())

            for j in range(p):
                if j == i or halted[j]:
                    continue
                delay, dropped = link_delay(step, i, j)
                if dropped:
                    emit(t, i, "drop", j, frag.local_iter, _ZERO)
                    continue
                seq += 1
                inbox[j].append((t + 1 + delay, seq, wire.transmit(i, j, frag)))

            st.protocol, report = ue_on_check(st.protocol, residual < tolerance,
                                              sender=i, local_iter=st.local_iter)
            if report is not None and not monitor.stopped:
                emit(t, i, report.kind.name.lower(), monitor_id, st.local_iter, _ZERO)
                seq += 1
                reports.append((control_due(i, monitor_id), seq,
                                wire.transmit(i, monitor_id, report)))

            if stop_due[i] is not None and stop_due[i] <= t:
                halted[i] = True
                halt_time[i] = time.perf_counter() - start
                emit(t, i, "halt", monitor_id, st.local_iter, _ZERO)
            elif st.local_iter >= max_iters:
                exhausted = True

        t += 1
        if all(halted) or exhausted:
            break

    elapsed = time.perf_counter() - start
    x, global_residual = assemble(states, graph, params, kernel)
    return AsyncResult(
        x=x,
        per_ue_iters=[s.local_iter for s in states],
        per_ue_time=[ht if ht is not None else elapsed for ht in halt_time],
        import_matrix=np.array([s.import_counts for s in states], dtype=np.int64),
        global_residual=global_residual,
        converged=all(halted),
        kernel=kernel,
        virtual_time=t,
        trace=trace,
        steps=steps,
        iterates=iterates,
    )
