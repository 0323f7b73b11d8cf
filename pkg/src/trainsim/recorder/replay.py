"""Replay and resume.

Replay reconstructs scene state from the nearest preceding keyframe plus
deltas and is bit-deterministic; motors between recorded samples interpolate
with the motor engine for smooth spectator playback.  Resume rebuilds the
scenegraph by re-applying recorded action events through the normal engine.
"""

from __future__ import annotations

import json

from ..errors import IntegrityError, RangeError
from ..motor import Motor, motor_interpolate
from .format import EVENT_ACTION, RecordedSession


def replay(rec: RecordedSession, from_t_us: int = 0):
    """Yield (timestamp_us, scene dict, events) for every frame at/after from_t_us."""
    if rec.frames and not 0 <= from_t_us <= rec.duration_us:
        raise RangeError(f"replay start {from_t_us} outside recording span")
    scene: dict[int, Motor] = {}
    for frame in rec.frames:
        for oid, motor in frame.transforms:
            scene[oid] = motor
        if frame.timestamp_us >= from_t_us:
            yield frame.timestamp_us, dict(scene), list(frame.events)


def state_at(rec: RecordedSession, t_us: int, interpolate: bool = False) -> dict[int, Motor]:
    """Scene at time t: nearest preceding keyframe plus deltas.

    With interpolate=True, motors blend toward the next recorded sample for
    smooth spectator playback.
    """
    if not rec.frames:
        return {}
    if not 0 <= t_us <= rec.duration_us:
        raise RangeError(f"time {t_us} outside recording span 0..{rec.duration_us}")
    start = 0
    for i in rec.keyframe_indices():
        if rec.frames[i].timestamp_us <= t_us:
            start = i
        else:
            break
    scene: dict[int, Motor] = {}
    last_seen: dict[int, tuple[int, Motor]] = {}
    next_sample: dict[int, tuple[int, Motor]] = {}
    for frame in rec.frames[start:]:
        if frame.timestamp_us <= t_us:
            for oid, motor in frame.transforms:
                scene[oid] = motor
                last_seen[oid] = (frame.timestamp_us, motor)
        else:
            if not interpolate:
                break
            for oid, motor in frame.transforms:
                if oid not in next_sample:
                    next_sample[oid] = (frame.timestamp_us, motor)
    if interpolate:
        for oid, (t1, m1) in next_sample.items():
            if oid in last_seen:
                t0, m0 = last_seen[oid]
                if t1 > t0:
                    scene[oid] = motor_interpolate(m0, m1, (t_us - t0) / (t1 - t0))
    return scene


def resume(rec: RecordedSession, t_us: int, scenario_document: dict):
    """Rebuild live state at time t: scene transforms + scenegraph.

    Returns (scene, scenegraph, applied_events).  The scenegraph is rebuilt by
    re-applying every recorded action event at or before t through
    perform_action, which is deterministic.
    """
    from ..scenegraph import ActionEvent, load_scenario, perform_action

    scene = state_at(rec, t_us)
    graph = load_scenario(scenario_document)
    applied = []
    for frame in rec.frames:
        if frame.timestamp_us > t_us:
            break
        for etype, data in frame.events:
            if etype != EVENT_ACTION:
                continue
            try:
                ev = ActionEvent.from_json(json.loads(data))
                graph, outcome = perform_action(graph, ev)
            except Exception as exc:
                raise IntegrityError(
                    f"recorded action event at t={frame.timestamp_us} cannot be re-applied: {exc}"
                ) from exc
            applied.append((ev, outcome))
    return scene, graph, applied
