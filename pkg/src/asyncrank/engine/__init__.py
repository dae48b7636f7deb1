"""Asynchronous iteration engine."""
from .concurrent import run_concurrent
from .core import (
    AsyncResult,
    Schedule,
    Step,
    StepRecord,
    TraceEvent,
    UEState,
    assemble,
    completed_imports_pct,
    ingest_fragment,
    latest_per_sender,
    round_robin_script,
    trace_from_text,
    trace_to_text,
    ue_step,
)
from .runner import EXEC_MODES, run_async
from .simulate import DirectWire, EndpointWire, simulate_deterministic

__all__ = [
    "AsyncResult", "DirectWire", "EXEC_MODES", "EndpointWire", "Schedule", "Step",
    "StepRecord", "TraceEvent", "UEState", "assemble", "completed_imports_pct",
    "ingest_fragment", "latest_per_sender", "round_robin_script", "run_async", "run_concurrent",
    "simulate_deterministic", "trace_from_text", "trace_to_text", "ue_step",
]
