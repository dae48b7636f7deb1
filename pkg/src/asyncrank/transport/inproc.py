"""In-process channels.

Each receiver owns one inbox queue shared by all its senders.  A frame
counts as sent once the receiver pulls it in :meth:`poll_receive`, so a
peer that polls slowly sees only the latest fragment from each sender.
"""
from __future__ import annotations

import threading
from collections import deque

from ..errors import TransportError
from .base import Endpoint, as_frame, enqueue_latest


class InProcessNetwork:
    def __init__(self, ids, send_timeout: float = 1.0):
        self._inboxes = {i: deque() for i in ids}
        self._locks = {i: threading.Lock() for i in ids}
        self.endpoints = {i: InProcessEndpoint(self, i, send_timeout) for i in ids}

    def __getitem__(self, ue_id) -> "InProcessEndpoint":
        return self.endpoints[ue_id]

    def close(self):
        for ep in self.endpoints.values():
            ep.close()


class InProcessEndpoint(Endpoint):
    def __init__(self, network: InProcessNetwork, ue_id: int, send_timeout: float = 1.0):
        super().__init__(ue_id, send_timeout)
        self._net = network

    def send_nonblocking(self, peer, msg) -> bool:
        if peer not in self._net._inboxes or peer == self.id:
            raise TransportError(f"no in-process channel to peer {peer}", self.id)
        frame = as_frame(msg)
        with self._net._locks[peer]:
            self.stats.superseded += enqueue_latest(self._net._inboxes[peer], frame, self.id)
        self.stats.sent += 1
        return True

    def _take_raw(self):
        with self._net._locks[self.id]:
            inbox = self._net._inboxes[self.id]
            frames = [item[2] for item in inbox]
            inbox.clear()
        return frames
