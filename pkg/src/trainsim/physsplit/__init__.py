"""Dissected physics pipeline: passive physics server + host-side scene sync."""

from .messages import (
    Collider,
    MessageType,
    PhysicsDescriptor,
    PhysicsMessage,
    decode_message,
    encode_message,
    read_message,
    write_message,
)
from .world import PhysicsWorld, WorldObject
from .server import PhysicsServer, serve_tcp
from .host import Host, InProcessTransport, TcpTransport

__all__ = [
    "Collider",
    "MessageType",
    "PhysicsDescriptor",
    "PhysicsMessage",
    "decode_message",
    "encode_message",
    "read_message",
    "write_message",
    "PhysicsWorld",
    "WorldObject",
    "PhysicsServer",
    "serve_tcp",
    "Host",
    "InProcessTransport",
    "TcpTransport",
]
