"""Per-object interpolation buffers.

Received motors are queued with their timestamps and sampled a fixed render
delay in the past, blending bracketing entries with motor_interpolate.  A gap
wider than the snap threshold jumps straight to the newer entry so stalls do
not produce long ghost glides.
"""

from __future__ import annotations

from bisect import insort
from collections import deque

from ..errors import NoDataError
from ..motor import Motor, motor_interpolate

MAX_ENTRIES = 64


class InterpBuffer:
    def __init__(self, render_delay_ms: float = 100.0, snap_threshold_ms: float = 250.0):
        self.render_delay_ms = float(render_delay_ms)
        self.snap_threshold_ms = float(snap_threshold_ms)
        self._queues: dict[int, deque[tuple[float, Motor]]] = {}

    def objects(self):
        return self._queues.keys()

    def push(self, object_id: int, timestamp_ms: float, motor: Motor) -> None:
        q = self._queues.get(object_id)
        if q is None:
            q = deque()
            self._queues[object_id] = q
        if q and timestamp_ms < q[-1][0]:
            # late packet: insert in timestamp order
            items = list(q)
            insort(items, (timestamp_ms, motor), key=lambda e: e[0])
            q.clear()
            q.extend(items)
        else:
            q.append((timestamp_ms, motor))
        while len(q) > MAX_ENTRIES:
            q.popleft()

    def sample(self, object_id: int, now_ms: float) -> Motor:
        q = self._queues.get(object_id)
        if not q:
            raise NoDataError(f"no samples for object {object_id}")
        t = now_ms - self.render_delay_ms
        if t <= q[0][0]:
            return q[0][1]
        if t >= q[-1][0]:
            return q[-1][1]
        # find bracketing pair
        prev = q[0]
        for entry in q:
            if entry[0] >= t:
                t0, m0 = prev
                t1, m1 = entry
                if t1 - t0 > self.snap_threshold_ms:
                    return m1
                u = (t - t0) / (t1 - t0)
                return motor_interpolate(m0, m1, u)
            prev = entry
        return q[-1][1]

    def sample_all(self, now_ms: float) -> dict[int, Motor]:
        return {oid: self.sample(oid, now_ms) for oid in self._queues}

    def prune(self, now_ms: float) -> None:
        """Drop entries already behind the sample horizon, keeping one bracket."""
        horizon = now_ms - self.render_delay_ms
        for q in self._queues.values():
            while len(q) > 1 and q[1][0] <= horizon:
                q.popleft()
