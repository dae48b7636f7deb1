"""Messages exchanged between units of execution (UEs) and the monitor."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class MessageKind(enum.IntEnum):
    FRAGMENT = 0
    CONVERGE = 1
    DIVERGE = 2
    STOP = 3


CONTROL_KINDS = (MessageKind.CONVERGE, MessageKind.DIVERGE, MessageKind.STOP)


@dataclass(frozen=True, eq=False)
class Fragment:
    """Contiguous slice ``[start, stop)`` of the rank vector produced by
    ``sender`` at its local iteration ``local_iter``."""

    sender: int
    local_iter: int
    start: int
    values: np.ndarray

    kind = MessageKind.FRAGMENT

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def stop(self) -> int:
        return self.start + len(self.values)

    @property
    def range(self) -> tuple[int, int]:
        return self.start, self.stop

    def __eq__(self, other):
        if not isinstance(other, Fragment):
            return NotImplemented
        # bitwise payload comparison, so NaN == NaN and 0.0 != -0.0
        return (
            self.sender == other.sender
            and self.local_iter == other.local_iter
            and self.start == other.start
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None

    def __repr__(self):
        return (f"Fragment(sender={self.sender}, local_iter={self.local_iter}, "
                f"range=[{self.start}, {self.stop}))")


@dataclass(frozen=True)
class ControlMessage:
    kind: MessageKind
    sender: int
    local_iter: int = 0

    def __post_init__(self):
        kind = MessageKind(self.kind)
        if kind is MessageKind.FRAGMENT:
            raise ValueError("control message cannot have kind FRAGMENT")
        object.__setattr__(self, "kind", kind)
