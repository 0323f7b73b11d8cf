"""Scripted trainees.

The planner dry-runs the scenegraph and lays the whole session out as a
deterministic schedule: which client performs which action over which tick
span, the tool path, and the completion payload.  Error-injection knobs map
one-to-one onto scoring factors (late start, wrong angle within completion
tolerance, contamination touch), so the analytics paths get exercised without
ever derailing progression.  Both a live run and a resumed run execute the
same schedule, which is what makes resume reproduce the original report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..motor import quat_from_axis_angle, quat_slerp
from ..scenegraph import ActionEvent, Prototype, load_scenario
from .config import substream_seed


@dataclass
class Injection:
    node_id: str
    kind: str  # late | wrong-angle | contamination-touch | wrong-answer
    amount: float = 0.0  # ticks for late, degrees for wrong-angle

    @classmethod
    def parse(cls, text: str) -> "Injection":
        parts = text.split(":")
        if len(parts) < 2:
            raise ConfigurationError(f"injection '{text}' must be node:kind[:amount]")
        return cls(parts[0], parts[1], float(parts[2]) if len(parts) > 2 else 0.0)


@dataclass
class ScheduledAction:
    node_id: str
    client: int
    start_tick: int
    end_tick: int
    path_from: np.ndarray
    path_to: np.ndarray
    orient_from: np.ndarray
    orient_to: np.ndarray
    payload: dict
    detour: np.ndarray | None = None  # contamination touch point mid-path

    def tool_pose_at(self, tick: int) -> tuple[np.ndarray, np.ndarray]:
        span = max(1, self.end_tick - self.start_tick)
        u = np.clip((tick - self.start_tick) / span, 0.0, 1.0)
        if self.detour is not None:
            # piecewise linear through the detour point at the midpoint
            if u < 0.5:
                pos = self.path_from + (self.detour - self.path_from) * (u / 0.5)
            else:
                pos = self.detour + (self.path_to - self.detour) * ((u - 0.5) / 0.5)
        else:
            pos = self.path_from + (self.path_to - self.path_from) * u
        rot = quat_slerp(self.orient_from, self.orient_to, float(u))
        return pos, rot


def _target_of(node) -> tuple[np.ndarray, np.ndarray]:
    p = node.params
    if node.prototype == Prototype.INSERT:
        return (
            np.asarray(p["target_position"], dtype=float),
            np.asarray(p["target_orientation"], dtype=float),
        )
    # non-insert actions get a nominal workstation target derived from the id
    h = abs(hash(node.id)) % 1000 / 1000.0
    return np.array([h, 0.5, 0.25]), np.array([1.0, 0, 0, 0])


def _payload_for(node, injection: Injection | None) -> dict:
    proto = node.prototype
    p = node.params
    if proto == Prototype.INSERT:
        pos = list(np.asarray(p["target_position"], dtype=float))
        orient = np.asarray(p["target_orientation"], dtype=float)
        if injection is not None and injection.kind == "wrong-angle":
            off = quat_from_axis_angle([0, 0, 1], np.radians(injection.amount))
            from ..motor import quat_multiply

            orient = quat_multiply(orient, off)
        return {"pose": {"position": pos, "orientation": [float(x) for x in orient]}}
    if proto == Prototype.REMOVE:
        return {"object_id": p["object_id"], "clearance": float(p["clearance"]) * 1.5}
    if proto == Prototype.USE:
        return {"dwell": float(p["dwell"]) * 1.1, "gesture_samples": list(range(int(p.get("gesture_samples", 0))))}
    if proto == Prototype.QUESTION:
        if injection is not None and injection.kind == "wrong-answer":
            wrong = [o for o in p["options"] if o not in p["correct"]]
            return {"chosen": wrong[:1] if wrong else []}
        return {"chosen": list(p["correct"])}
    raise ConfigurationError(f"unknown prototype {proto}")


def plan_schedule(
    scenario: dict, clients: int, injections: list[Injection], seed: int, action_ticks: int = 40
) -> list[ScheduledAction]:
    """Dry-run the scenegraph into a full deterministic schedule.

    Splices triggered by planned events are simulated, so scheduled work
    covers runtime-generated paths too.
    """
    rng = np.random.default_rng(substream_seed(seed, "script"))
    by_node = {i.node_id: i for i in injections}
    graph = load_scenario(scenario)
    tool_pos = {c: np.array([0.2 * c, 0.3, -0.5]) for c in range(1, clients + 1)}
    tool_rot = {c: np.array([1.0, 0, 0, 0]) for c in range(1, clients + 1)}
    client_free_at = {c: 0 for c in range(1, clients + 1)}
    schedule: list[ScheduledAction] = []
    turn = 0
    while not graph.all_completed():
        frontier = sorted(graph.frontier)
        if not frontier:
            break
        node_id = frontier[int(rng.integers(0, len(frontier)))]
        node = graph.nodes[node_id]
        injection = by_node.get(node_id)
        client = 1 + turn % clients
        turn += 1
        start = max(client_free_at[client], max((s.end_tick for s in schedule), default=0))
        if injection is not None and injection.kind == "late":
            start += int(injection.amount)
        end = start + action_ticks
        target_pos, target_rot = _target_of(node)
        detour = None
        if injection is not None and injection.kind == "contamination-touch":
            for spec in node.scoring:
                if spec.kind == "error_collider":
                    detour = np.asarray(spec.params["region"]["center"], dtype=float)
                    break
            if detour is None:
                raise ConfigurationError(
                    f"contamination-touch on '{node_id}' needs an error_collider factor"
                )
        payload = _payload_for(node, injection)
        schedule.append(
            ScheduledAction(
                node_id=node_id,
                client=client,
                start_tick=start,
                end_tick=end,
                path_from=tool_pos[client].copy(),
                path_to=target_pos,
                orient_from=tool_rot[client].copy(),
                orient_to=np.asarray(
                    payload["pose"]["orientation"] if node.prototype == Prototype.INSERT else target_rot,
                    dtype=float,
                ),
                payload=payload,
                detour=detour,
            )
        )
        tool_pos[client] = target_pos.copy()
        tool_rot[client] = np.asarray(schedule[-1].orient_to, dtype=float).copy()
        client_free_at[client] = end
        # advance the scratch graph exactly as the runtime will
        ev = ActionEvent(node_id, payload)
        from ..scenegraph import perform_action

        graph, outcome = perform_action(graph, ev)
        if not outcome.completed:
            raise ConfigurationError(
                f"planned payload for '{node_id}' does not complete it: {outcome.violation}"
            )
    return schedule
