"""Scenegraph domain types: Action nodes, events, alternative-path rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ..errors import SchemaError

DEFAULT_POSITION_TOLERANCE = 0.005  # 5 mm
DEFAULT_ANGLE_TOLERANCE = 5.0  # degrees


class Prototype(str, Enum):
    INSERT = "insert"
    REMOVE = "remove"
    USE = "use"
    QUESTION = "question"


class ActionState(str, Enum):
    PENDING = "pending"
    ACTIVE = "active"
    COMPLETED = "completed"
    UNDONE = "undone"


@dataclass
class ScoringAttachment:
    """A scoring-factor spec plus its weight, as attached to one Action."""

    kind: str
    weight: float
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.weight < 0:
            raise SchemaError(f"scoring weight must be >= 0, got {self.weight}")


@dataclass
class ActionNode:
    id: str
    prototype: Prototype
    params: dict[str, Any] = field(default_factory=dict)
    scoring: list[ScoringAttachment] = field(default_factory=list)
    state: ActionState = ActionState.PENDING
    parallel_group: str | None = None
    undo_count: int = 0

    def validate_params(self) -> None:
        p = self.params
        proto = self.prototype
        if proto == Prototype.INSERT:
            if "target_position" not in p:
                raise SchemaError(f"insert action '{self.id}' needs target_position")
            p.setdefault("target_orientation", [1.0, 0.0, 0.0, 0.0])
            p.setdefault("position_tolerance", DEFAULT_POSITION_TOLERANCE)
            p.setdefault("angle_tolerance", DEFAULT_ANGLE_TOLERANCE)
        elif proto == Prototype.REMOVE:
            if "object_id" not in p or "clearance" not in p:
                raise SchemaError(f"remove action '{self.id}' needs object_id and clearance")
        elif proto == Prototype.USE:
            if "tool_id" not in p or "target_id" not in p or "dwell" not in p:
                raise SchemaError(f"use action '{self.id}' needs tool_id, target_id, dwell")
            p.setdefault("gesture_samples", 0)
        elif proto == Prototype.QUESTION:
            for key in ("prompt", "options", "correct"):
                if key not in p:
                    raise SchemaError(f"question action '{self.id}' needs {key}")
            if not set(p["correct"]).issubset(set(p["options"])):
                raise SchemaError(f"question action '{self.id}': correct set not in options")


@dataclass
class ActionEvent:
    node_id: str
    payload: dict[str, Any]
    timestamp_us: int = 0

    def to_json(self) -> dict:
        return {"node_id": self.node_id, "payload": self.payload, "timestamp_us": self.timestamp_us}

    @classmethod
    def from_json(cls, obj: dict) -> "ActionEvent":
        return cls(obj["node_id"], obj["payload"], obj.get("timestamp_us", 0))


@dataclass
class ActionOutcome:
    node_id: str
    completed: bool
    violation: str | None = None
    spliced_rule: str | None = None


@dataclass
class AltPathRule:
    """Splice a scenario fragment after a node when an event matches the trigger.

    Triggers: ``wrong_answer`` (question answered incorrectly),
    ``deviation_gt`` (insert placement angle deviation above threshold, in
    degrees; fires whether or not the insert completed), and ``completion``.
    A rule fires at most once.
    """

    name: str
    trigger_node: str
    condition: str  # wrong_answer | deviation_gt | completion
    threshold: float = 0.0
    subgraph: dict = field(default_factory=dict)  # {actions: [...], edges: [...]}
    splice_after: str = ""
    fired: bool = False

    def matches(self, node: ActionNode, ev: ActionEvent) -> bool:
        if self.fired or ev.node_id != self.trigger_node:
            return False
        if self.condition == "completion":
            return True
        if self.condition == "wrong_answer":
            if node.prototype != Prototype.QUESTION:
                return False
            chosen = set(ev.payload.get("chosen", []))
            return chosen != set(node.params["correct"])
        if self.condition == "deviation_gt":
            if node.prototype != Prototype.INSERT:
                return False
            pose = ev.payload.get("pose")
            if pose is None:
                return False
            from ..motor import quat_angle_deg

            target = np.asarray(node.params["target_orientation"], dtype=float)
            got = np.asarray(pose["orientation"], dtype=float)
            return quat_angle_deg(target, got) > self.threshold
        raise SchemaError(f"unknown alt-path condition '{self.condition}'")
