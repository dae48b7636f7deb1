"""Per-UE state and the asynchronous update rule.

A UE holds a full-length *view* of the rank vector: its own freshest
block plus the latest fragment it has accepted from every peer.  Each
step applies the kernel to that view, so peer blocks may be stale; the
iteration count a peer had reached when producing the fragment in the
view is tracked in ``last_seen``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ..errors import ParameterError, ProtocolError, ScriptError
from ..kernels import GoogleParams, apply_block
from ..kernels.core import KERNELS, apply_google_block, full_block, renormalize, residual_l1
from ..messages import Fragment
from ..termination import UEProtocolState
from ..webgraph import Partition, TransitionBlock


@dataclass
class UEState:
    id: int
    partition: Partition
    view: np.ndarray
    local_iter: int = 0
    last_seen: list = field(default_factory=list)
    import_counts: list = field(default_factory=list)
    protocol: UEProtocolState = field(default_factory=UEProtocolState)

    @classmethod
    def create(cls, ue_id: int, partition: Partition, x0, pc_max: int = 1) -> "UEState":
        view = np.array(x0, dtype=np.float64)
        if view.shape != (partition.n,):
            raise ParameterError(f"x0 has shape {view.shape}, expected ({partition.n},)")
        return cls(id=ue_id, partition=partition, view=view,
                   last_seen=[0] * partition.p, import_counts=[0] * partition.p,
                   protocol=UEProtocolState(pc_max=pc_max))

    @property
    def rows(self) -> range:
        return self.partition.block(self.id)

    @property
    def own(self) -> np.ndarray:
        r = self.rows
        return self.view[r.start:r.stop]

    @property
    def converged(self) -> bool:
        return self.protocol.converged

    def tau(self) -> tuple:
        return tuple(self.last_seen)


def ue_step(state: UEState, block: TransitionBlock, params: GoogleParams,
            kernel: str = "power"):
    """Recompute the UE's own block from its current view.

    Returns ``(fragment, local_residual)`` and updates ``state`` in place.
    """
    if block.owner != state.id:
        raise ParameterError(f"UE {state.id} handed the block of UE {block.owner}")
    new = apply_block(block, state.view, params, kernel)
    residual = residual_l1(new, state.own)
    state.view[block.row_start:block.row_stop] = new
    state.local_iter += 1
    state.last_seen[state.id] = state.local_iter
    state.import_counts[state.id] = state.local_iter
    return Fragment(state.id, state.local_iter, block.row_start, new), residual


def ingest_fragment(state: UEState, frag: Fragment) -> bool:
    """Install ``frag`` into the view if it is newer than what is held.

    Stale or duplicate fragments are discarded and ``False`` returned.
    """
    sender = frag.sender
    if sender == state.id:
        raise ProtocolError(f"UE {state.id} received its own fragment")
    if not 0 <= sender < state.partition.p:
        raise ProtocolError(f"fragment from unknown UE {sender}")
    rows = state.partition.block(sender)
    if frag.range != (rows.start, rows.stop):
        raise ProtocolError(
            f"fragment from UE {sender} covers {frag.range}, owner block is "
            f"({rows.start}, {rows.stop})")
    if frag.local_iter <= state.last_seen[sender]:
        return False
    state.view[rows.start:rows.stop] = frag.values
    state.last_seen[sender] = frag.local_iter
    state.import_counts[sender] += 1
    return True


def latest_per_sender(fragments):
    """Split arrivals into the newest fragment per sender and the rest.

    Returns ``(latest, superseded)``; ``latest`` is ordered by sender id.
    """
    newest = {}
    superseded = []
    for frag in fragments:
        held = newest.get(frag.sender)
        if held is None or frag.local_iter > held.local_iter:
            if held is not None:
                superseded.append(held)
            newest[frag.sender] = frag
        else:
            superseded.append(frag)
    return [newest[k] for k in sorted(newest)], superseded


SCHEDULE_MODES = ("lockstep", "seeded-random", "scripted")


@dataclass(frozen=True)
class Step:
    """One scripted UE activation.

    ``delay`` postpones delivery of the produced fragment by that many
    extra ticks (an int for every peer, or a ``{peer: ticks}`` map);
    ``drop`` lists peers that never receive it.
    """

    ue: int
    delay: object = 0
    drop: tuple = ()

    def delay_to(self, peer: int) -> int:
        if isinstance(self.delay, dict):
            return int(self.delay.get(peer, 0))
        return int(self.delay)


@dataclass(frozen=True)
class Schedule:
    mode: str = "lockstep"
    seed: int = 0
    delay_bound: int = 0
    drop_rate: float = 0.0
    script: Optional[tuple] = None
    cycle: bool = False

    def __post_init__(self):
        if self.mode not in SCHEDULE_MODES:
            raise ParameterError(f"unknown schedule mode {self.mode!r}")
        if self.delay_bound < 0 or int(self.delay_bound) != self.delay_bound:
            raise ParameterError(f"delay_bound must be a non-negative integer, got {self.delay_bound}")
        if not 0.0 <= self.drop_rate < 1.0:
            raise ParameterError(f"drop_rate must lie in [0, 1), got {self.drop_rate}")
        if self.mode == "lockstep" and (self.delay_bound or self.drop_rate):
            raise ParameterError("lockstep schedules have no delays or drops")
        if self.mode == "scripted":
            if not self.script:
                raise ScriptError("scripted schedule needs a non-empty script")
            object.__setattr__(self, "script", tuple(_normalize_tick(t, i)
                                                     for i, t in enumerate(self.script)))

    @classmethod
    def lockstep(cls) -> "Schedule":
        return cls("lockstep")

    @classmethod
    def seeded(cls, seed: int, delay_bound: int = 0, drop_rate: float = 0.0) -> "Schedule":
        return cls("seeded-random", seed=seed, delay_bound=delay_bound, drop_rate=drop_rate)

    @classmethod
    def scripted(cls, script, cycle: bool = False) -> "Schedule":
        return cls("scripted", script=tuple(script), cycle=cycle)


def _normalize_tick(tick, index):
    if isinstance(tick, (int, Step)):
        tick = [tick]
    try:
        steps = list(tick)
    except TypeError:
        raise ScriptError(f"tick {index}: expected a list of steps, got {tick!r}") from None
    out = []
    for s in steps:
        if isinstance(s, bool) or not isinstance(s, (int, Step)):
            raise ScriptError(f"tick {index}: malformed step {s!r}")
        out.append(Step(s) if isinstance(s, int) else s)
    return tuple(out)


def round_robin_script(p: int, rounds: int = 1) -> list:
    """Every UE steps once per tick, in id order, with zero delay."""
    return [[Step(i) for i in range(p)] for _ in range(rounds)]


class TraceEvent(NamedTuple):
    virtual_time: int
    ue: int
    kind: str
    peer: int
    local_iter: int
    residual: float


class StepRecord(NamedTuple):
    """One application of the update rule: UE ``ue`` at its local time ``t``
    used peer fragments produced at local iterations ``tau``."""

    virtual_time: int
    ue: int
    t: int
    tau: tuple
    residual: float


@dataclass
class AsyncResult:
    x: np.ndarray
    per_ue_iters: list
    per_ue_time: list
    import_matrix: np.ndarray
    global_residual: float
    converged: bool
    kernel: str = "power"
    virtual_time: Optional[int] = None
    trace: Optional[list] = field(default=None, repr=False)
    steps: Optional[list] = field(default=None, repr=False)
    iterates: Optional[list] = field(default=None, repr=False)

    def completed_imports_pct(self) -> list:
        return completed_imports_pct(self.import_matrix, self.per_ue_iters)


def completed_imports_pct(import_matrix, per_ue_iters) -> list:
    """Per receiver, the mean over peers of fragments accepted divided by
    fragments the peer produced, in percent."""
    m = np.asarray(import_matrix, dtype=np.float64)
    p = m.shape[0]
    if p == 1:
        return [100.0]
    out = []
    for i in range(p):
        ratios = [m[i, j] / per_ue_iters[j] if per_ue_iters[j] else 1.0
                  for j in range(p) if j != i]
        out.append(100.0 * float(np.mean(ratios)))
    return out


def assemble(states, graph, params, kernel):
    """Concatenate each UE's own block; renormalize for the power kernel.

    Returns ``(x, global_residual)`` with the residual ``||x - G x||_1``.
    """
    x = np.concatenate([s.own for s in sorted(states, key=lambda s: s.id)])
    if kernel == "power":
        x = renormalize(x)
    gx = apply_google_block(full_block(graph), x, params)
    return x, residual_l1(x, gx)


def check_kernel(kernel):
    if kernel not in KERNELS:
        raise ParameterError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def trace_to_text(events) -> str:
    lines = [f"{e.virtual_time}\t{e.ue}\t{e.kind}\t{e.peer}\t{e.local_iter}\t{e.residual!r}"
             for e in events]
    return "\n".join(lines) + ("\n" if lines else "")


def trace_from_text(text: str) -> list:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ScriptError(f"trace line {lineno}: expected 6 fields, got {len(parts)}")
        t, ue, kind, peer, it, res = parts
        out.append(TraceEvent(int(t), int(ue), kind, int(peer), int(it), float(res)))
    return out
