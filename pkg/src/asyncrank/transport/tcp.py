"""TCP transport.

Every endpoint listens on ``base_port + id``.  Outbound traffic to each
peer goes over one persistent connection fed by a background sender
thread; frames are written back to back, the header giving the length.
"""
from __future__ import annotations

import logging
import socket
import threading
from collections import deque

from ..errors import FrameError, TransportError
from .base import Endpoint, as_frame, enqueue_latest
from .codec import HEADER_SIZE, frame_length

log = logging.getLogger(__name__)


def _recv_exact(sock, size):
    buf = bytearray()
    while len(buf) < size:
        chunk = sock.recv(size - len(buf))
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


def make_listener(host: str = "127.0.0.1", port: int = 0) -> socket.socket:
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    sock.listen(64)
    return sock


class _OutLink:
    def __init__(self, sock):
        self.sock = sock
        self.queue = deque()
        self.cond = threading.Condition()
        self.busy = False
        self.error = None
        self.closed = False
        self.thread = None


class TcpEndpoint(Endpoint):
    def __init__(self, ue_id, addresses, send_timeout=1.0, listener=None):
        super().__init__(ue_id, send_timeout)
        self.addresses = dict(addresses)
        if listener is None:
            host, port = self.addresses[ue_id]
            listener = make_listener(host, port)
        self._listener = listener
        self._inbox = deque()
        self._inbox_lock = threading.Lock()
        self._links = {}
        self._closed = False
        self._conns = []
        self._threads = []
        t = threading.Thread(target=self._accept_loop, name=f"tcp-accept-{ue_id}", daemon=True)
        t.start()
        self._threads.append(t)

    @property
    def address(self):
        return self._listener.getsockname()

    def _accept_loop(self):
        while not self._closed:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._conns.append(conn)
            t = threading.Thread(target=self._read_loop, args=(conn,),
                                 name=f"tcp-read-{self.id}", daemon=True)
            t.start()
            self._threads.append(t)

    def _read_loop(self, conn):
        try:
            while True:
                header = _recv_exact(conn, HEADER_SIZE)
                if header is None:
                    return
                try:
                    total = frame_length(header)
                except FrameError as exc:
                    # stream is desynchronized; nothing after this is trustworthy
                    self.stats.corrupt += 1
                    log.warning("endpoint %d: closing connection (%s)", self.id, exc)
                    return
                rest = _recv_exact(conn, total - HEADER_SIZE)
                if rest is None:
                    return
                with self._inbox_lock:
                    self._inbox.append(header + rest)
        except OSError:
            return
        finally:
            conn.close()

    def _connect(self, peer):
        addr = self.addresses.get(peer)
        if addr is None or peer == self.id:
            raise TransportError(f"no TCP address for peer {peer}", self.id)
        try:
            sock = socket.create_connection(addr, timeout=self.send_timeout)
        except OSError as exc:
            raise TransportError(f"peer {peer} at {addr[0]}:{addr[1]} unreachable: {exc}",
                                 self.id) from exc
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        link = _OutLink(sock)
        link.thread = threading.Thread(target=self._send_loop, args=(link,),
                                       name=f"tcp-send-{self.id}-{peer}", daemon=True)
        link.thread.start()
        self._links[peer] = link
        return link

    def _send_loop(self, link):
        while True:
            with link.cond:
                while not link.queue and not link.closed:
                    link.cond.wait()
                if not link.queue:
                    return
                _, _, frame = link.queue.popleft()
                link.busy = True
            try:
                link.sock.sendall(frame)
            except OSError as exc:
                with link.cond:
                    link.error = exc
                    link.busy = False
                    link.cond.notify_all()
                return
            with link.cond:
                link.busy = False
                link.cond.notify_all()

    def send_nonblocking(self, peer, msg) -> bool:
        link = self._links.get(peer) or self._connect(peer)
        if link.error is not None:
            raise TransportError(f"link to peer {peer} failed: {link.error}", self.id)
        frame = as_frame(msg)
        with link.cond:
            self.stats.superseded += enqueue_latest(link.queue, frame, peer)
            link.cond.notify_all()
        self.stats.sent += 1
        return True

    def _take_raw(self):
        with self._inbox_lock:
            frames = list(self._inbox)
            self._inbox.clear()
        return frames

    def flush(self, timeout: float = 5.0) -> bool:
        """Wait until every outbound queue has been written to its socket."""
        for link in list(self._links.values()):
            with link.cond:
                done = link.cond.wait_for(
                    lambda: (not link.queue and not link.busy) or link.error is not None,
                    timeout)
            if not done:
                return False
        return True

    def close(self):
        if self._closed:
            return
        self._closed = True
        for link in self._links.values():
            with link.cond:
                link.closed = True
                link.cond.notify_all()
        for link in self._links.values():
            if link.thread is not None:
                link.thread.join(timeout=self.send_timeout)
            try:
                link.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            link.sock.close()
        try:
            self._listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._listener.close()
        for conn in self._conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass


def tcp_cluster(ids, host: str = "127.0.0.1", base_port: int = 0,
                send_timeout: float = 1.0) -> dict:
    """Endpoints for ``ids`` on ``base_port + id``; ``base_port=0`` picks
    free ephemeral ports instead."""
    ids = list(ids)
    listeners = {}
    try:
        for i in ids:
            listeners[i] = make_listener(host, base_port + i if base_port else 0)
    except OSError as exc:
        for s in listeners.values():
            s.close()
        raise TransportError(f"cannot bind listener: {exc}") from exc
    addresses = {i: s.getsockname()[:2] for i, s in listeners.items()}
    return {i: TcpEndpoint(i, addresses, send_timeout, listeners[i]) for i in ids}
