"""Message transports: in-process channels and a TCP wire protocol."""
from .base import Endpoint, TransportStats, poll_receive, send_nonblocking
from .codec import HEADER_SIZE, decode_frame, encode_frame, frame_length
from .inproc import InProcessEndpoint, InProcessNetwork
from .tcp import TcpEndpoint, tcp_cluster

__all__ = [
    "Endpoint", "TransportStats", "poll_receive", "send_nonblocking",
    "HEADER_SIZE", "decode_frame", "encode_frame", "frame_length",
    "InProcessEndpoint", "InProcessNetwork", "TcpEndpoint", "tcp_cluster",
]
