"""Change-threshold recording.

Only transforms that moved more than 0.5 mm or rotated more than 0.1 degrees
since their last written value are stored; every 5 seconds a keyframe stores
the whole scene so replay can seek.  The thresholds match the sync layer's
publishing thresholds, so recordings agree with network traffic.

The threshold test runs once per object per frame on the session's hot path,
so it is hand-rolled scalar arithmetic with the last written translation
cached, not vector math.
"""

from __future__ import annotations

import json
import math

from ..errors import OrderingError
from ..motor import Motor
from .format import EVENT_ACTION, EVENT_SCORE, Frame, KEYFRAME_INTERVAL_US, RecordedSession

TRANSLATION_THRESHOLD_M = 0.0005
ROTATION_THRESHOLD_DEG = 0.1

_TRANSLATION_SQ = TRANSLATION_THRESHOLD_M * TRANSLATION_THRESHOLD_M
# |dot(q1, q2)| > cos(angle/2) means the rotation change is under the threshold
_ROTATION_MIN_ABS_DOT = math.cos(math.radians(ROTATION_THRESHOLD_DEG) / 2.0)


def _translation_tuple(m: Motor) -> tuple[float, float, float]:
    """2 * dual * conj(real), vector part, as plain floats."""
    rw, rx, ry, rz = m.real.tolist()
    dw, dx, dy, dz = m.dual.tolist()
    # dual * conj(real): conj flips the sign of the real's vector part
    return (
        2.0 * (-dw * rx + dx * rw - dy * rz + dz * ry),
        2.0 * (-dw * ry + dx * rz + dy * rw - dz * rx),
        2.0 * (-dw * rz - dx * ry + dy * rx + dz * rw),
    )


def moved_enough(last: Motor | None, now: Motor) -> bool:
    if last is None:
        return True
    lt = _translation_tuple(last)
    nt = _translation_tuple(now)
    dx, dy, dz = nt[0] - lt[0], nt[1] - lt[1], nt[2] - lt[2]
    if dx * dx + dy * dy + dz * dz > _TRANSLATION_SQ:
        return True
    lr = last.real.tolist()
    nr = now.real.tolist()
    dot = lr[0] * nr[0] + lr[1] * nr[1] + lr[2] * nr[2] + lr[3] * nr[3]
    return abs(dot) < _ROTATION_MIN_ABS_DOT


class SessionRecorder:
    def __init__(self, session_id: bytes, tick_rate_hz: int, user_count: int):
        self.recording = RecordedSession(session_id, tick_rate_hz, user_count)
        self._last_written: dict[int, Motor] = {}
        self._last_translation: dict[int, tuple[float, float, float]] = {}
        self._last_keyframe_us: int | None = None
        self._last_ts: int = -1

    def _changed(self, oid: int, now: Motor) -> bool:
        last = self._last_written.get(oid)
        if last is None:
            return True
        if last is now:
            return False
        lt = self._last_translation[oid]
        nt = _translation_tuple(now)
        dx, dy, dz = nt[0] - lt[0], nt[1] - lt[1], nt[2] - lt[2]
        if dx * dx + dy * dy + dz * dz > _TRANSLATION_SQ:
            return True
        lr = last.real.tolist()
        nr = now.real.tolist()
        dot = lr[0] * nr[0] + lr[1] * nr[1] + lr[2] * nr[2] + lr[3] * nr[3]
        return abs(dot) < _ROTATION_MIN_ABS_DOT

    def record_frame(
        self,
        scene: dict[int, Motor],
        events: list[tuple[int, bytes]],
        timestamp_us: int,
    ) -> Frame | None:
        """Append one frame; returns it, or None when nothing needed writing."""
        if timestamp_us <= self._last_ts:
            raise OrderingError(
                f"timestamp {timestamp_us} not after last recorded {self._last_ts}"
            )
        keyframe = (
            self._last_keyframe_us is None
            or timestamp_us - self._last_keyframe_us >= KEYFRAME_INTERVAL_US
        )
        if keyframe:
            transforms = [(oid, scene[oid]) for oid in sorted(scene)]
        else:
            transforms = [
                (oid, scene[oid]) for oid in sorted(scene) if self._changed(oid, scene[oid])
            ]
        if not transforms and not events and not keyframe:
            return None
        frame = Frame(timestamp_us, keyframe, transforms, list(events))
        self.recording.frames.append(frame)
        self._last_ts = timestamp_us
        if keyframe:
            self._last_keyframe_us = timestamp_us
        for oid, motor in transforms:
            self._last_written[oid] = motor
            self._last_translation[oid] = _translation_tuple(motor)
        return frame

    def record_action_event(self, ev, timestamp_us: int, scene: dict[int, Motor]) -> None:
        data = json.dumps(ev.to_json(), sort_keys=True).encode()
        self.record_frame(scene, [(EVENT_ACTION, data)], timestamp_us)

    @staticmethod
    def encode_action_event(ev) -> tuple[int, bytes]:
        return (EVENT_ACTION, json.dumps(ev.to_json(), sort_keys=True).encode())

    @staticmethod
    def encode_score(action_id: str, factors: list[dict]) -> tuple[int, bytes]:
        return (
            EVENT_SCORE,
            json.dumps({"action_id": action_id, "factors": factors}, sort_keys=True).encode(),
        )
