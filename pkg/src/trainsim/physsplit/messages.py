"""Physics wire protocol: length-prefixed little-endian messages.

    u32 length | u8 type | u32 session_id | payload

    REGISTER    object id u32, collider u8, dims 3xf32, mass f32,
                friction f32, restitution f32, kinematic u8, position 3xf32
    UNREGISTER  object id u32
    STEP_CONFIG dt f32
    COMMAND     object id u32, kind u8 (0 impulse, 1 kinematic target),
                impulse 3xf32 | motor 8xf32
    STATE       tick u32, count u16, then (object id u32 + motor 8xf32) each
    PING/PONG   nonce u32
    ERROR       code u16, text u16-prefixed utf-8
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..errors import FramingError, ProtocolError
from ..motor import Motor


class MessageType(IntEnum):
    REGISTER = 1
    UNREGISTER = 2
    STEP_CONFIG = 3
    COMMAND = 4
    STATE = 5
    PING = 6
    PONG = 7
    ERROR = 8


class Collider(IntEnum):
    SPHERE = 0
    BOX = 1
    CAPSULE = 2


@dataclass
class PhysicsDescriptor:
    object_id: int
    collider: Collider
    dims: tuple[float, float, float]  # sphere: (r,0,0); box: half extents; capsule: (r, half_len, 0)
    mass: float
    friction: float = 0.5
    restitution: float = 0.0
    kinematic: bool = False

    def __post_init__(self):
        if not self.kinematic and self.mass <= 0:
            raise ProtocolError("dynamic objects need positive mass")
        if max(self.dims) <= 0:
            raise ProtocolError("collider dimensions must be positive")


@dataclass
class PhysicsMessage:
    type: MessageType
    session_id: int
    descriptor: PhysicsDescriptor | None = None
    object_id: int | None = None
    dt: float | None = None
    command_kind: int | None = None  # 0 impulse, 1 kinematic target
    impulse: tuple | None = None
    motor: Motor | None = None
    tick: int | None = None
    records: list[tuple[int, Motor]] = field(default_factory=list)
    nonce: int | None = None
    position: tuple | None = None
    error_code: int = 0
    error_text: str = ""


_HEAD = struct.Struct("<BI")
_REGISTER = struct.Struct("<IB3ffffB3f")
_OBJECT = struct.Struct("<I")
_DT = struct.Struct("<f")
_CMD_HEAD = struct.Struct("<IB")
_IMPULSE = struct.Struct("<3f")
_MOTOR = struct.Struct("<8f")
_STATE_HEAD = struct.Struct("<IH")
_STATE_RECORD = struct.Struct("<I8f")
_NONCE = struct.Struct("<I")
_ERROR_HEAD = struct.Struct("<HH")


def encode_message(msg: PhysicsMessage) -> bytes:
    body = [_HEAD.pack(int(msg.type), msg.session_id)]
    t = msg.type
    if t == MessageType.REGISTER:
        d = msg.descriptor
        pos = msg.position if msg.position is not None else (0.0, 0.0, 0.0)
        body.append(
            _REGISTER.pack(
                d.object_id, int(d.collider), *d.dims, d.mass, d.friction, d.restitution,
                1 if d.kinematic else 0, *pos,
            )
        )
    elif t == MessageType.UNREGISTER:
        body.append(_OBJECT.pack(msg.object_id))
    elif t == MessageType.STEP_CONFIG:
        body.append(_DT.pack(msg.dt))
    elif t == MessageType.COMMAND:
        body.append(_CMD_HEAD.pack(msg.object_id, msg.command_kind))
        if msg.command_kind == 0:
            body.append(_IMPULSE.pack(*msg.impulse))
        else:
            body.append(_MOTOR.pack(*msg.motor.coefficients().tolist()))
    elif t == MessageType.STATE:
        body.append(_STATE_HEAD.pack(msg.tick, len(msg.records)))
        for oid, motor in msg.records:
            body.append(_STATE_RECORD.pack(oid, *motor.coefficients().tolist()))
    elif t in (MessageType.PING, MessageType.PONG):
        body.append(_NONCE.pack(msg.nonce))
    elif t == MessageType.ERROR:
        text = msg.error_text.encode()
        body.append(_ERROR_HEAD.pack(msg.error_code, len(text)))
        body.append(text)
    else:
        raise ProtocolError(f"cannot encode message type {t}")
    payload = b"".join(body)
    return struct.pack("<I", len(payload)) + payload


def decode_message(payload: bytes) -> PhysicsMessage:
    """Decode one message body (without the u32 length prefix)."""
    if len(payload) < _HEAD.size:
        raise FramingError("message shorter than its header")
    raw_type, session_id = _HEAD.unpack_from(payload, 0)
    try:
        mtype = MessageType(raw_type)
    except ValueError as exc:
        raise ProtocolError(f"unknown message type {raw_type}") from exc
    msg = PhysicsMessage(mtype, session_id)
    at = _HEAD.size
    if mtype == MessageType.REGISTER:
        (oid, collider, d0, d1, d2, mass, friction, restitution, kinematic,
         px, py, pz) = _REGISTER.unpack_from(payload, at)
        msg.descriptor = PhysicsDescriptor(
            oid, Collider(collider), (d0, d1, d2), mass, friction, restitution, bool(kinematic)
        )
        msg.position = (px, py, pz)
    elif mtype == MessageType.UNREGISTER:
        (msg.object_id,) = _OBJECT.unpack_from(payload, at)
    elif mtype == MessageType.STEP_CONFIG:
        (msg.dt,) = _DT.unpack_from(payload, at)
    elif mtype == MessageType.COMMAND:
        msg.object_id, msg.command_kind = _CMD_HEAD.unpack_from(payload, at)
        at += _CMD_HEAD.size
        if msg.command_kind == 0:
            msg.impulse = _IMPULSE.unpack_from(payload, at)
        else:
            msg.motor = Motor.from_coefficients(np.array(_MOTOR.unpack_from(payload, at)))
    elif mtype == MessageType.STATE:
        msg.tick, count = _STATE_HEAD.unpack_from(payload, at)
        at += _STATE_HEAD.size
        for _ in range(count):
            fields = _STATE_RECORD.unpack_from(payload, at)
            msg.records.append((fields[0], Motor.from_coefficients(np.array(fields[1:]))))
            at += _STATE_RECORD.size
    elif mtype in (MessageType.PING, MessageType.PONG):
        (msg.nonce,) = _NONCE.unpack_from(payload, at)
    elif mtype == MessageType.ERROR:
        msg.error_code, length = _ERROR_HEAD.unpack_from(payload, at)
        at += _ERROR_HEAD.size
        msg.error_text = payload[at : at + length].decode()
    return msg


def write_message(sock, msg: PhysicsMessage) -> None:
    sock.sendall(encode_message(msg))


def read_message(sock) -> PhysicsMessage | None:
    head = _read_exact(sock, 4)
    if head is None:
        return None
    (length,) = struct.unpack("<I", head)
    payload = _read_exact(sock, length)
    if payload is None:
        raise FramingError("connection closed mid-message")
    return decode_message(payload)


def _read_exact(sock, n: int) -> bytes | None:
    out = b""
    while len(out) < n:
        chunk = sock.recv(n - len(out))
        if not chunk:
            return None if not out else None
        out += chunk
    return out
