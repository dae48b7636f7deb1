"""Endpoint contract shared by the in-process and TCP transports.

Fragments are latest-value: while an older fragment to the same peer is
still unsent it is replaced by the newer one, keeping its slot behind any
control frames queued after it.  Control frames are never dropped or
superseded.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

from ..errors import FrameError
from ..messages import MessageKind
from .codec import decode_frame, encode_frame, peek_kind

log = logging.getLogger(__name__)


@dataclass
class TransportStats:
    sent: int = 0
    superseded: int = 0
    received: int = 0
    corrupt: int = 0


def as_frame(msg) -> bytes:
    if isinstance(msg, (bytes, bytearray, memoryview)):
        return bytes(msg)
    return encode_frame(msg)


def enqueue_latest(queue: deque, frame: bytes, tag=None) -> int:
    """Append ``frame``; drop pending fragments sharing ``tag``.

    Queue items are ``(tag, kind, frame)``.  Returns how many were
    superseded.
    """
    kind = peek_kind(frame)
    dropped = 0
    if kind is MessageKind.FRAGMENT:
        keep = [item for item in queue
                if not (item[0] == tag and item[1] is MessageKind.FRAGMENT)]
        dropped = len(queue) - len(keep)
        if dropped:
            queue.clear()
            queue.extend(keep)
    queue.append((tag, kind, frame))
    return dropped


class Endpoint:
    """Single-owner message endpoint for one UE (or the monitor)."""

    def __init__(self, ue_id: int, send_timeout: float = 1.0):
        self.id = ue_id
        self.send_timeout = send_timeout
        self.stats = TransportStats()

    def send_nonblocking(self, peer: int, msg) -> bool:
        raise NotImplementedError

    def _take_raw(self) -> list:
        raise NotImplementedError

    def poll_receive(self) -> list:
        """Decode everything that has arrived; corrupt frames are skipped."""
        out = []
        for raw in self._take_raw():
            try:
                out.append(decode_frame(raw))
            except FrameError as exc:
                self.stats.corrupt += 1
                log.warning("endpoint %d: dropping corrupt frame (%s)", self.id, exc)
                continue
            self.stats.received += 1
        return out

    def flush(self, timeout: float = 5.0) -> bool:
        return True

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def send_nonblocking(endpoint: Endpoint, peer: int, frame) -> bool:
    return endpoint.send_nonblocking(peer, frame)


def poll_receive(endpoint: Endpoint) -> list:
    return endpoint.poll_receive()
