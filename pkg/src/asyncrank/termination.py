"""Centralized termination detection with persistence counters.

Computing UEs report CONVERGE once their local test has held for
``pc_max`` consecutive checks and DIVERGE when it fails after having
held.  The monitor applies the same counter logic to the predicate
"every UE's latest report is CONVERGE" and broadcasts STOP when its own
counter fills.  Both machines are immutable; transitions return a new
state plus whatever message must be sent.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

from .errors import ParameterError, ProtocolError, ScriptError
from .messages import ControlMessage, MessageKind


def _persist(converged: bool, pc: int, pc_max: int, check: bool):
    """Shared counter mechanics.

    Returns ``(converged, pc, reached, diverged)``; ``reached`` is true only
    on the check that fills the counter, ``diverged`` only when leaving a
    converged state.
    """
    if check:
        reached = False
        if pc < pc_max:
            pc += 1
            reached = pc == pc_max
        return True, pc, reached, False
    if converged:
        return False, 0, False, True
    return False, pc, False, False


@dataclass(frozen=True)
class UEProtocolState:
    pc_max: int = 1
    converged: bool = False
    pc: int = 0

    def __post_init__(self):
        if self.pc_max < 1:
            raise ParameterError(f"pc_max must be >= 1, got {self.pc_max}")


@dataclass(frozen=True)
class MonitorState:
    ue_status: tuple
    pc_max: int = 1
    converged: bool = False
    pc: int = 0
    stopped: bool = False

    def __post_init__(self):
        if self.pc_max < 1:
            raise ParameterError(f"pc_max must be >= 1, got {self.pc_max}")

    @classmethod
    def initial(cls, p: int, pc_max: int = 1) -> "MonitorState":
        return cls(ue_status=(False,) * p, pc_max=pc_max)

    @property
    def p(self) -> int:
        return len(self.ue_status)


def ue_on_check(state: UEProtocolState, locally_converged: bool, sender: int = 0,
                local_iter: int = 0):
    """Advance a computing UE after its residual test.

    Returns ``(new_state, message_or_None)``.
    """
    converged, pc, reached, diverged = _persist(
        state.converged, state.pc, state.pc_max, bool(locally_converged))
    msg = None
    if reached:
        msg = ControlMessage(MessageKind.CONVERGE, sender, local_iter)
    elif diverged:
        msg = ControlMessage(MessageKind.DIVERGE, sender, local_iter)
    return replace(state, converged=converged, pc=pc), msg


def monitor_step(state: MonitorState, messages: Sequence[ControlMessage] = ()):
    """One monitor iteration: absorb every received report, then test once.

    An iteration with no messages models an idle poll; it still advances
    the persistence counter while all UEs stand converged.
    Returns ``(new_state, broadcast_stop)``.
    """
    if state.stopped:
        raise ProtocolError("monitor received a report after STOP")
    status = list(state.ue_status)
    for msg in messages:
        if msg.kind is MessageKind.STOP:
            raise ProtocolError(f"STOP sent to the monitor by UE {msg.sender}")
        if not 0 <= msg.sender < state.p:
            raise ProtocolError(f"report from unknown UE {msg.sender}")
        status[msg.sender] = msg.kind is MessageKind.CONVERGE
    converged, pc, reached, _ = _persist(state.converged, state.pc, state.pc_max, all(status))
    new = replace(state, ue_status=tuple(status), converged=converged, pc=pc,
                  stopped=reached)
    return new, reached


def monitor_on_message(state: MonitorState, msg: ControlMessage):
    return monitor_step(state, [msg])


class ScenarioEvent(NamedTuple):
    step: int
    action: str          # emit | deliver | tick | stop
    kind: Optional[MessageKind]
    ue: Optional[int]


@dataclass
class ScenarioResult:
    trace: list
    monitor: MonitorState
    ue_states: list
    stop_step: Optional[int]
    pending: list = field(default_factory=list)

    @property
    def stops(self) -> list:
        return [e for e in self.trace if e.action == "stop"]


def run_protocol_scenario(p: int, script, pc_max_ue: int = 1, pc_max_monitor: int = 1,
                          delivery: str = "immediate") -> ScenarioResult:
    """Replay a scripted protocol run.

    Script entries are tuples:

    ``("check", ue, locally_converged)``
        the UE finishes an iteration and runs its convergence test.
    ``("deliver",)`` / ``("deliver", ue)``
        the monitor runs one iteration consuming the oldest in-flight
        report (optionally the oldest from ``ue``).  Only valid with
        ``delivery="scripted"``.
    ``("tick",)``
        the monitor runs one iteration with no new report.

    With ``delivery="immediate"`` every emitted report is consumed by its
    own monitor iteration straight away.  Once STOP is broadcast it is
    delivered to every UE and the rest of the script is ignored.
    """
    if p < 1:
        raise ScriptError(f"need at least one UE, got p={p}")
    if delivery not in ("immediate", "scripted"):
        raise ScriptError(f"unknown delivery mode {delivery!r}")
    ues = [UEProtocolState(pc_max=pc_max_ue) for _ in range(p)]
    monitor = MonitorState.initial(p, pc_max_monitor)
    in_flight: list[ControlMessage] = []
    trace: list[ScenarioEvent] = []
    stop_step = None

    def monitor_iteration(step, msgs):
        nonlocal monitor, stop_step
        for m in msgs:
            trace.append(ScenarioEvent(step, "deliver", m.kind, m.sender))
        if not msgs:
            trace.append(ScenarioEvent(step, "tick", None, None))
        monitor, stop = monitor_step(monitor, msgs)
        if stop:
            stop_step = step
            for ue in range(p):
                trace.append(ScenarioEvent(step, "stop", MessageKind.STOP, ue))

    for step, event in enumerate(script):
        if stop_step is not None:
            break
        if not isinstance(event, (tuple, list)) or not event:
            raise ScriptError(f"event {step}: malformed entry {event!r}")
        action = event[0]
        if action == "check":
            if len(event) != 3:
                raise ScriptError(f"event {step}: 'check' takes (ue, converged)")
            ue, ok = event[1], event[2]
            if not isinstance(ue, int) or not 0 <= ue < p:
                raise ScriptError(f"event {step}: UE id {ue!r} outside [0, {p})")
            ues[ue], msg = ue_on_check(ues[ue], bool(ok), sender=ue)
            if msg is not None:
                trace.append(ScenarioEvent(step, "emit", msg.kind, ue))
                if delivery == "immediate":
                    monitor_iteration(step, [msg])
                else:
                    in_flight.append(msg)
        elif action == "deliver":
            if delivery != "scripted":
                raise ScriptError(f"event {step}: 'deliver' needs delivery='scripted'")
            if len(event) > 2:
                raise ScriptError(f"event {step}: 'deliver' takes at most one argument")
            candidates = [i for i, m in enumerate(in_flight)
                          if len(event) == 1 or m.sender == event[1]]
            if not candidates:
                raise ScriptError(f"event {step}: nothing in flight to deliver")
            monitor_iteration(step, [in_flight.pop(candidates[0])])
        elif action == "tick":
            if len(event) != 1:
                raise ScriptError(f"event {step}: 'tick' takes no arguments")
            monitor_iteration(step, [])
        else:
            raise ScriptError(f"event {step}: unknown action {action!r}")

    return ScenarioResult(trace=trace, monitor=monitor, ue_states=ues,
                          stop_step=stop_step, pending=in_flight)
