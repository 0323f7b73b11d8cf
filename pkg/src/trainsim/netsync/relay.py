"""Authoritative relay session.

Star topology: every client publishes updates for the objects it owns; the
relay keeps the authoritative motors and fans accepted records out to every
other client in the session.  Stale ticks (not newer than the last accepted
tick for that sender/object) and non-owner writes are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..motor import Motor
from .codec import PacketKind, UpdatePacket, UpdateRecord


@dataclass
class SessionState:
    session_id: int = 0
    clients: set[int] = field(default_factory=set)
    ownership: dict[int, int] = field(default_factory=dict)  # object_id -> owner client
    authoritative: dict[int, Motor] = field(default_factory=dict)
    last_tick: dict[tuple[int, int], int] = field(default_factory=dict)  # (client, object) -> tick

    def add_client(self, client_id: int) -> None:
        self.clients.add(client_id)

    def remove_client(self, client_id: int) -> None:
        self.clients.discard(client_id)

    def assign_object(self, object_id: int, owner: int, motor: Motor | None = None) -> None:
        self.ownership[object_id] = owner
        if motor is not None:
            self.authoritative[object_id] = motor


@dataclass
class RelayCounters:
    unknown_sender: int = 0
    not_owner: int = 0
    stale: int = 0
    accepted: int = 0
    fanned_out: int = 0


class Relay:
    """Single logical event loop; deterministic given input ordering."""

    def __init__(self, state: SessionState):
        self.state = state
        self.counters = RelayCounters()

    def tick(self, incoming: list[UpdatePacket]) -> dict[int, list[UpdatePacket]]:
        """Process one batch of packets; returns per-client outgoing packets."""
        state = self.state
        accepted_by_tick: list[UpdateRecord] = []
        accepted_sender: list[int] = []
        for packet in incoming:
            if packet.sender_id not in state.clients:
                self.counters.unknown_sender += 1
                continue
            for record in packet.records:
                owner = state.ownership.get(record.object_id)
                if owner != packet.sender_id:
                    self.counters.not_owner += 1
                    continue
                key = (packet.sender_id, record.object_id)
                last = state.last_tick.get(key)
                if last is not None and packet.tick <= last:
                    self.counters.stale += 1
                    continue
                state.last_tick[key] = packet.tick
                state.authoritative[record.object_id] = record.motor
                accepted_by_tick.append(record)
                accepted_sender.append(packet.sender_id)
                self.counters.accepted += 1

        outgoing: dict[int, list[UpdatePacket]] = {}
        if not accepted_by_tick:
            return outgoing
        for client in sorted(state.clients):
            records = [
                rec
                for rec, sender in zip(accepted_by_tick, accepted_sender)
                if sender != client
            ]
            if not records:
                continue
            self.counters.fanned_out += len(records)
            outgoing[client] = [
                UpdatePacket(
                    session_id=state.session_id,
                    sender_id=0,  # relay speaks as client 0's authority channel
                    tick=max(state.last_tick.values(), default=0),
                    kind=PacketKind.UPDATE,
                    records=records,
                )
            ]
        return outgoing


def relay_tick(
    state: SessionState, incoming: list[UpdatePacket]
) -> tuple[SessionState, dict[int, list[UpdatePacket]]]:
    """Functional wrapper around Relay for one-shot use."""
    relay = Relay(state)
    outgoing = relay.tick(incoming)
    return state, outgoing
