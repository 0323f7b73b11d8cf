"""Deterministic single-link network emulator.

Models one directional link: independent packet loss, fixed latency plus
uniform jitter, and a serialization queue at the configured bandwidth
(token-bucket equivalent: each packet occupies the link for size/bandwidth
seconds starting no earlier than the previous packet finished).  FIFO order
is preserved within the link; reordering only ever happens across links.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass
class NetProfile:
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    loss_prob: float = 0.0
    bandwidth_bytes_per_s: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.latency_ms < 0 or self.jitter_ms < 0 or self.bandwidth_bytes_per_s <= 0:
            raise InvalidInputError("profile values must be non-negative")
        if not 0.0 <= self.loss_prob < 1.0:
            raise InvalidInputError("loss_prob must lie in [0, 1)")


@dataclass
class Delivery:
    send_time: float
    arrival_time: float  # nan when dropped
    size: int
    dropped: bool
    packet: object


class LinkEmulator:
    """Stateful per-link emulator; feed packets in non-decreasing send order."""

    def __init__(self, profile: NetProfile):
        self.profile = profile
        self._rng = np.random.default_rng(profile.seed)
        self._link_free_at = 0.0
        self._last_arrival = 0.0
        self._last_send = -math.inf

    def send(self, time_s: float, packet, size: int | None = None) -> Delivery:
        if time_s < self._last_send:
            raise InvalidInputError("send times must be non-decreasing")
        self._last_send = time_s
        size = len(packet) if size is None else size
        p = self.profile
        dropped = bool(self._rng.random() < p.loss_prob)
        jitter = self._rng.uniform(-p.jitter_ms, p.jitter_ms) if p.jitter_ms > 0 else 0.0
        if dropped:
            return Delivery(time_s, math.nan, size, True, packet)
        start_tx = max(time_s, self._link_free_at)
        self._link_free_at = start_tx + size / p.bandwidth_bytes_per_s
        arrival = self._link_free_at + (p.latency_ms + jitter) / 1000.0
        # jitter must not reorder the link's own FIFO
        arrival = max(arrival, self._last_arrival)
        self._last_arrival = arrival
        return Delivery(time_s, arrival, size, False, packet)


def emulate(profile: NetProfile, sent: list[tuple[float, object]]) -> list[Delivery]:
    """Run a full trace through one link; returns every delivery incl. drops."""
    link = LinkEmulator(profile)
    return [link.send(t, pkt) for t, pkt in sent]


def delivered(deliveries: list[Delivery]) -> list[tuple[float, object]]:
    return [(d.arrival_time, d.packet) for d in deliveries if not d.dropped]


def trace_csv(deliveries: list[Delivery]) -> str:
    """CSV trace: send_time, arrival_time, size, dropped."""
    out = io.StringIO()
    out.write("send_time,arrival_time,size,dropped\n")
    for d in deliveries:
        arrival = "" if d.dropped else f"{d.arrival_time:.9f}"
        out.write(f"{d.send_time:.9f},{arrival},{d.size},{int(d.dropped)}\n")
    return out.getvalue()
