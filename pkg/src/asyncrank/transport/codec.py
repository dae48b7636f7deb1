"""Binary frame codec.

Layout (little-endian)::

    magic      4s   b"ARNK"
    version    B
    kind       B    0 fragment, 1 CONVERGE, 2 DIVERGE, 3 STOP
    sender     I
    local_iter Q
    start      I
    length     I    number of payload values (0 for control frames)
    payload    length * <f8
    crc32      I    over every preceding byte
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import ChecksumError, FrameError, SizeError
from ..messages import ControlMessage, Fragment, MessageKind

MAGIC = b"ARNK"
VERSION = 1
HEADER = struct.Struct("<4sBBIQII")
HEADER_SIZE = HEADER.size  # 26
CRC = struct.Struct("<I")
CRC_SIZE = CRC.size
MAX_U32 = 2**32 - 1
MAX_U64 = 2**64 - 1
KIND_OFFSET = 5


def _check_u(name, value, limit):
    if not 0 <= value <= limit:
        raise SizeError(f"{name}={value} does not fit the frame field")


def encode_frame(msg) -> bytes:
    if isinstance(msg, Fragment):
        values = msg.values
        _check_u("range_len", len(values), MAX_U32)
        _check_u("range_start", msg.start, MAX_U32)
        kind, start, payload = MessageKind.FRAGMENT, msg.start, values.astype("<f8").tobytes()
        count = len(values)
    elif isinstance(msg, ControlMessage):
        kind, start, payload, count = msg.kind, 0, b"", 0
    else:
        raise TypeError(f"cannot encode {type(msg).__name__}")
    _check_u("sender", msg.sender, MAX_U32)
    _check_u("local_iter", msg.local_iter, MAX_U64)
    body = HEADER.pack(MAGIC, VERSION, int(kind), msg.sender, msg.local_iter, start, count) + payload
    return body + CRC.pack(zlib.crc32(body))


def frame_length(header: bytes) -> int:
    """Total frame size implied by a header; validates magic and version."""
    if len(header) < HEADER_SIZE:
        raise FrameError(f"short header: {len(header)} bytes")
    magic, version, kind, _, _, _, count = HEADER.unpack_from(header)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameError(f"unsupported version {version}")
    return HEADER_SIZE + 8 * count + CRC_SIZE


def peek_kind(frame: bytes):
    """Kind byte of an encoded frame, or None if it cannot be read."""
    if len(frame) <= KIND_OFFSET:
        return None
    try:
        return MessageKind(frame[KIND_OFFSET])
    except ValueError:
        return None


def decode_frame(frame: bytes):
    """Decode exactly one frame; raises :class:`FrameError` on any defect."""
    frame = bytes(frame)
    expected = frame_length(frame)
    if len(frame) != expected:
        raise FrameError(f"frame is {len(frame)} bytes, header implies {expected}")
    (crc,) = CRC.unpack_from(frame, expected - CRC_SIZE)
    if zlib.crc32(frame[:-CRC_SIZE]) != crc:
        raise ChecksumError("CRC32 mismatch")
    _, _, kind, sender, local_iter, start, count = HEADER.unpack_from(frame)
    try:
        kind = MessageKind(kind)
    except ValueError:
        raise FrameError(f"unknown message kind {kind}") from None
    if kind is MessageKind.FRAGMENT:
        values = np.frombuffer(frame, dtype="<f8", count=count, offset=HEADER_SIZE)
        return Fragment(sender=sender, local_iter=local_iter, start=start,
                        values=values.astype(np.float64))
    if count != 0:
        raise FrameError(f"control frame carries {count} payload values")
    return ControlMessage(kind=kind, sender=sender, local_iter=local_iter)
