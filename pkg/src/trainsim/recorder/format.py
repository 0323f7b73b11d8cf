"""MREC recording format (little-endian, length-prefixed chunks).

    header (28 bytes):
        magic   "MREC"            4
        version u16               2
        session id                16
        tick rate u32 (Hz)        4
        user count u16            2

    then a sequence of chunks:
        length u32 | type u8 | crc32 u32 of payload | payload

    chunk types: 0x01 frame, 0x02 keyframe index.

    frame payload:
        timestamp u64 (microseconds from session start)
        flags u8 (bit0: keyframe)
        transform_count u16, event_count u16
        transforms: object id u32 + 8 motor coefficients f32   (36 B each)
        events: type u16 | length u16 | payload bytes

    keyframe index payload: u32 count, then (u64 timestamp, u64 file offset) each.

The crc isolates corruption to a single chunk; readers name the offset of the
chunk that failed.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import FramingError, IntegrityError, ProtocolError
from ..motor import Motor

MAGIC = b"MREC"
VERSION = 1

CHUNK_FRAME = 0x01
CHUNK_INDEX = 0x02

EVENT_ACTION = 0x0001  # ActionEvent JSON payload
EVENT_SCORE = 0x0002  # finalized action score JSON payload
EVENT_AUDIO_MARKER = 0x00A0  # reserved for future audio sync markers

_HEADER = struct.Struct("<4sH16sIH")
_FRAME_HEAD = struct.Struct("<QBHH")
_TRANSFORM = struct.Struct("<I8f")
_EVENT_HEAD = struct.Struct("<HH")
_CHUNK_HEAD = struct.Struct("<IBI")

KEYFRAME_INTERVAL_US = 5_000_000  # at most every 5 s


@dataclass
class Frame:
    timestamp_us: int
    keyframe: bool = False
    transforms: list[tuple[int, Motor]] = field(default_factory=list)
    events: list[tuple[int, bytes]] = field(default_factory=list)

    def payload(self) -> bytes:
        out = [
            _FRAME_HEAD.pack(
                self.timestamp_us,
                1 if self.keyframe else 0,
                len(self.transforms),
                len(self.events),
            )
        ]
        for object_id, motor in self.transforms:
            out.append(_TRANSFORM.pack(object_id, *motor.coefficients().tolist()))
        for etype, data in self.events:
            out.append(_EVENT_HEAD.pack(etype, len(data)))
            out.append(data)
        return b"".join(out)

    @classmethod
    def from_payload(cls, data: bytes) -> "Frame":
        ts, flags, n_tr, n_ev = _FRAME_HEAD.unpack_from(data, 0)
        offset = _FRAME_HEAD.size
        transforms = []
        for _ in range(n_tr):
            fields = _TRANSFORM.unpack_from(data, offset)
            transforms.append((fields[0], Motor.from_coefficients(np.array(fields[1:]))))
            offset += _TRANSFORM.size
        events = []
        for _ in range(n_ev):
            etype, length = _EVENT_HEAD.unpack_from(data, offset)
            offset += _EVENT_HEAD.size
            events.append((etype, data[offset : offset + length]))
            offset += length
        if offset != len(data):
            raise FramingError("frame payload has trailing bytes")
        return cls(ts, bool(flags & 1), transforms, events)


@dataclass
class RecordedSession:
    session_id: bytes  # 16 bytes
    tick_rate_hz: int
    user_count: int
    frames: list[Frame] = field(default_factory=list)

    def __post_init__(self):
        if len(self.session_id) != 16:
            raise ProtocolError("session id must be 16 bytes")

    @property
    def duration_us(self) -> int:
        return self.frames[-1].timestamp_us if self.frames else 0

    def keyframe_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.frames) if f.keyframe]


def write_recording(rec: RecordedSession, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rec.session_id, rec.tick_rate_hz, rec.user_count))
        index: list[tuple[int, int]] = []
        for frame in rec.frames:
            if frame.keyframe:
                index.append((frame.timestamp_us, fh.tell()))
            payload = frame.payload()
            fh.write(_CHUNK_HEAD.pack(len(payload), CHUNK_FRAME, zlib.crc32(payload)))
            fh.write(payload)
        idx_payload = struct.pack("<I", len(index)) + b"".join(
            struct.pack("<QQ", ts, off) for ts, off in index
        )
        fh.write(_CHUNK_HEAD.pack(len(idx_payload), CHUNK_INDEX, zlib.crc32(idx_payload)))
        fh.write(idx_payload)


def read_recording(path) -> RecordedSession:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FramingError("recording shorter than its header")
    magic, version, session_id, tick_rate, users = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ProtocolError(f"bad recording magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported recording version {version}")
    rec = RecordedSession(session_id, tick_rate, users)
    offset = _HEADER.size
    last_ts = -1
    while offset < len(data):
        if offset + _CHUNK_HEAD.size > len(data):
            raise FramingError(f"truncated chunk header at offset {offset}")
        length, ctype, crc = _CHUNK_HEAD.unpack_from(data, offset)
        payload_at = offset + _CHUNK_HEAD.size
        payload = data[payload_at : payload_at + length]
        if len(payload) != length:
            raise FramingError(f"truncated chunk payload at offset {offset}")
        if zlib.crc32(payload) != crc:
            raise IntegrityError(f"chunk at offset {offset} failed its checksum")
        if ctype == CHUNK_FRAME:
            frame = Frame.from_payload(payload)
            if frame.timestamp_us <= last_ts:
                raise IntegrityError(f"frame at offset {offset} breaks timestamp order")
            last_ts = frame.timestamp_us
            rec.frames.append(frame)
        elif ctype == CHUNK_INDEX:
            pass  # advisory; frames were scanned anyway
        else:
            raise FramingError(f"unknown chunk type {ctype} at offset {offset}")
        offset = payload_at + length
    return rec
