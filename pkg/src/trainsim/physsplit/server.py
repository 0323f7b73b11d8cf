"""The passive physics server.

The server holds nothing but per-session worlds built from registration
descriptors; it has no scenario, scenegraph, or behavior state.  Its full
state serializes from the worlds alone, which makes passivity auditable.
"""

from __future__ import annotations

import socket
import socketserver
import threading
import time

from ..errors import ProtocolError
from .messages import (
    MessageType,
    PhysicsMessage,
    read_message,
    write_message,
)
from .world import PhysicsWorld


class PhysicsServer:
    """Deterministic message handler + stepper over per-session worlds."""

    def __init__(self, dt: float = 1.0 / 60.0):
        self.dt = dt
        self.worlds: dict[int, PhysicsWorld] = {}
        self.step_times_ms: list[float] = []

    def world(self, session_id: int) -> PhysicsWorld:
        if session_id not in self.worlds:
            self.worlds[session_id] = PhysicsWorld(dt=self.dt)
        return self.worlds[session_id]

    def handle(self, msg: PhysicsMessage) -> PhysicsMessage | None:
        world = self.world(msg.session_id)
        t = msg.type
        if t == MessageType.REGISTER:
            try:
                world.register(msg.descriptor, position=msg.position)
            except KeyError:
                return PhysicsMessage(
                    MessageType.ERROR, msg.session_id,
                    error_code=1, error_text=f"object {msg.descriptor.object_id} already registered",
                )
            return None
        if t == MessageType.UNREGISTER:
            world.unregister(msg.object_id)
            return None
        if t == MessageType.STEP_CONFIG:
            world.dt = float(msg.dt)
            return None
        if t == MessageType.COMMAND:
            if msg.command_kind == 0:
                world.apply_impulse(msg.object_id, msg.impulse)
            else:
                world.set_kinematic_target(msg.object_id, msg.motor)
            return None
        if t == MessageType.PING:
            return PhysicsMessage(MessageType.PONG, msg.session_id, nonce=msg.nonce)
        raise ProtocolError(f"server cannot handle message type {t}")

    def step_session(self, session_id: int) -> PhysicsMessage:
        world = self.world(session_id)
        t0 = time.perf_counter()
        records = world.step()
        self.step_times_ms.append((time.perf_counter() - t0) * 1000.0)
        return PhysicsMessage(
            MessageType.STATE, session_id, tick=world.tick, records=records
        )

    def snapshot(self, session_id: int) -> bytes:
        return self.world(session_id).snapshot()

    def metrics_csv(self) -> str:
        lines = ["step,step_ms"]
        lines += [f"{i},{ms:.6f}" for i, ms in enumerate(self.step_times_ms)]
        return "\n".join(lines) + "\n"


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        server: PhysicsServer = self.server.physics  # type: ignore[attr-defined]
        lock: threading.Lock = self.server.physics_lock  # type: ignore[attr-defined]
        while True:
            try:
                msg = read_message(self.request)
            except (ConnectionResetError, OSError):
                return
            if msg is None:
                return
            with lock:
                if msg.type == MessageType.STEP_CONFIG and msg.dt == 0.0:
                    # dt=0 is the wire-level step request: advance and reply STATE
                    reply = server.step_session(msg.session_id)
                else:
                    reply = server.handle(msg)
            if reply is not None:
                write_message(self.request, reply)


class _ThreadedTCP(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(
    host: str = "127.0.0.1", port: int = 0, dt: float = 1.0 / 60.0
) -> tuple[_ThreadedTCP, PhysicsServer, int]:
    """Start the loopback server; returns (tcp server, physics server, bound port)."""
    physics = PhysicsServer(dt=dt)
    tcp = _ThreadedTCP((host, port), _Handler)
    tcp.physics = physics  # type: ignore[attr-defined]
    tcp.physics_lock = threading.Lock()  # type: ignore[attr-defined]
    thread = threading.Thread(target=tcp.serve_forever, daemon=True)
    thread.start()
    return tcp, physics, tcp.server_address[1]
