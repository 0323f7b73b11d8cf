"""Multi-user transform synchronization: codec, relay, interpolation, emulator."""

from .codec import (
    HEADER_SIZE,
    MATRIX_PAYLOAD_BYTES,
    MOTOR_PAYLOAD_BYTES,
    PacketKind,
    RECORD_SIZE,
    UpdatePacket,
    UpdateRecord,
    decode_update,
    encode_matrix_update,
    encode_update,
)
from .emulator import NetProfile, emulate, trace_csv
from .interp import InterpBuffer
from .relay import Relay, SessionState

__all__ = [
    "HEADER_SIZE",
    "MATRIX_PAYLOAD_BYTES",
    "MOTOR_PAYLOAD_BYTES",
    "PacketKind",
    "RECORD_SIZE",
    "UpdatePacket",
    "UpdateRecord",
    "decode_update",
    "encode_matrix_update",
    "encode_update",
    "NetProfile",
    "emulate",
    "trace_csv",
    "InterpBuffer",
    "Relay",
    "SessionState",
]
