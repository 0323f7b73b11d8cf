"""Host side of the dissection.

The host keeps graphics-side motors only.  It registers descriptors with the
physics server, requests steps, and applies returned STATE records; it never
integrates physics locally for server-owned objects.
"""

from __future__ import annotations

import socket
from dataclasses import dataclass, field

from ..errors import ProtocolError
from ..motor import Motor
from .messages import (
    MessageType,
    PhysicsDescriptor,
    PhysicsMessage,
    read_message,
    write_message,
)
from .server import PhysicsServer


class InProcessTransport:
    """Direct function-call transport onto a PhysicsServer instance."""

    def __init__(self, server: PhysicsServer):
        self.server = server

    def send(self, msg: PhysicsMessage) -> PhysicsMessage | None:
        return self.server.handle(msg)

    def request_step(self, session_id: int) -> PhysicsMessage:
        return self.server.step_session(session_id)

    def close(self) -> None:
        pass


class TcpTransport:
    """Loopback stream transport: 4-byte length-prefixed messages."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send(self, msg: PhysicsMessage) -> PhysicsMessage | None:
        write_message(self.sock, msg)
        if msg.type == MessageType.PING:
            return read_message(self.sock)
        return None

    def request_step(self, session_id: int) -> PhysicsMessage:
        # dt=0 STEP_CONFIG doubles as the step request on the wire
        write_message(self.sock, PhysicsMessage(MessageType.STEP_CONFIG, session_id, dt=0.0))
        reply = read_message(self.sock)
        if reply is None or reply.type != MessageType.STATE:
            raise ProtocolError("expected STATE reply to a step request")
        return reply

    def close(self) -> None:
        self.sock.close()


@dataclass
class Host:
    """Game-logic side: graphics motors only, physics delegated."""

    session_id: int
    transport: object
    scene: dict[int, Motor] = field(default_factory=dict)
    unknown_records: int = 0

    def register(self, descriptor: PhysicsDescriptor, position=None) -> None:
        self.transport.send(
            PhysicsMessage(
                MessageType.REGISTER,
                self.session_id,
                descriptor=descriptor,
                position=tuple(position) if position is not None else None,
            )
        )
        self.scene[descriptor.object_id] = Motor.identity()

    def step(self) -> PhysicsMessage:
        state = self.transport.request_step(self.session_id)
        self.sync(state)
        return state

    def sync(self, state: PhysicsMessage) -> None:
        """Apply a STATE message to the graphics scene."""
        for oid, motor in state.records:
            if oid not in self.scene:
                self.unknown_records += 1
                continue
            self.scene[oid] = motor

    def ping(self, nonce: int) -> PhysicsMessage | None:
        return self.transport.send(
            PhysicsMessage(MessageType.PING, self.session_id, nonce=nonce)
        )
