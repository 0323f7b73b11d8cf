"""Scoring factors.

Each factor tracks one assessment signal while its Action is active and
finalizes to a score in [0, 100]:

    velocity        100 * (1 - excess_time / total_time), clamped
    error_collider  max(0, 100 - penalty * region_entries)
    angle           100 * max(0, 1 - deviation / max_deviation)
    question        100 if the chosen set equals the correct set else 0
    custom          named implementation resolved from the registry at load

An Action's score is the weighted average of its factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..errors import ConfigurationError, SchemaError


@dataclass
class ScoringFactorSpec:
    kind: str
    weight: float
    params: dict[str, Any] = field(default_factory=dict)


_CUSTOM_REGISTRY: dict[str, Callable[[dict], "FactorState"]] = {}


def register_custom_factor(name: str, factory: Callable[[dict], "FactorState"]) -> None:
    _CUSTOM_REGISTRY[name] = factory


@dataclass
class FactorState:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    # accumulators
    excess_time: float = 0.0
    total_time: float = 0.0
    entries: int = 0
    inside: bool = False
    deviation_deg: float | None = None
    chosen: list | None = None
    custom_samples: list = field(default_factory=list)
    updated: bool = False
    no_data: bool = False
    finalized_score: float | None = None

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "excess_time": self.excess_time,
            "total_time": self.total_time,
            "entries": self.entries,
            "inside": self.inside,
            "deviation_deg": self.deviation_deg,
            "chosen": self.chosen,
            "updated": self.updated,
        }

    def restore(self, snap: dict) -> None:
        self.excess_time = snap["excess_time"]
        self.total_time = snap["total_time"]
        self.entries = snap["entries"]
        self.inside = snap["inside"]
        self.deviation_deg = snap["deviation_deg"]
        self.chosen = snap["chosen"]
        self.updated = snap["updated"]


def make_factor(spec: ScoringFactorSpec) -> FactorState:
    if spec.kind == "custom":
        name = spec.params.get("callback")
        factory = _CUSTOM_REGISTRY.get(name)
        if factory is None:
            raise ConfigurationError(f"custom scoring factor '{name}' is not registered")
        state = factory(spec.params)
        state.kind = "custom"
        return state
    if spec.kind not in ("velocity", "error_collider", "angle", "question"):
        raise SchemaError(f"unknown scoring factor kind '{spec.kind}'")
    return FactorState(kind=spec.kind, params=dict(spec.params))


def _point_in_region(region: dict, point: np.ndarray) -> bool:
    kind = region.get("type", "box")
    center = np.asarray(region["center"], dtype=float)
    if kind == "box":
        half = np.asarray(region["half_extents"], dtype=float)
        return bool(np.all(np.abs(point - center) <= half))
    if kind == "sphere":
        return bool(np.linalg.norm(point - center) <= float(region["radius"]))
    raise SchemaError(f"unknown error region type '{kind}'")


def factor_update(state: FactorState, sample: dict) -> FactorState:
    """Feed one sample; the expected sample shape depends on the factor kind."""
    if state.finalized_score is not None:
        raise SchemaError("factor already finalized")
    kind = state.kind
    if kind == "velocity":
        if "dt" not in sample or "speed" not in sample:
            raise SchemaError("velocity factor sample needs dt and speed")
        dt = float(sample["dt"])
        state.total_time += dt
        if float(sample["speed"]) > float(state.params["v_max"]):
            state.excess_time += dt
    elif kind == "error_collider":
        if "position" not in sample:
            raise SchemaError("error_collider factor sample needs position")
        now_inside = _point_in_region(state.params["region"], np.asarray(sample["position"], dtype=float))
        if now_inside and not state.inside:
            state.entries += 1  # rising edge
        state.inside = now_inside
    elif kind == "angle":
        if "orientation" not in sample:
            raise SchemaError("angle factor sample needs orientation")
        from ..motor import quat_angle_deg

        target = np.asarray(state.params["target_orientation"], dtype=float)
        state.deviation_deg = quat_angle_deg(target, np.asarray(sample["orientation"], dtype=float))
    elif kind == "question":
        if "chosen" not in sample:
            raise SchemaError("question factor sample needs chosen")
        state.chosen = list(sample["chosen"])
    elif kind == "custom":
        state.custom_samples.append(sample)
    else:
        raise SchemaError(f"unknown factor kind '{kind}'")
    state.updated = True
    return state


def factor_finalize(state: FactorState) -> float:
    """Close the factor and return its score in [0, 100]."""
    if state.finalized_score is not None:
        return state.finalized_score
    if not state.updated:
        # never fed: neutral score, flagged so reports can show it
        state.finalized_score = 100.0
        state.no_data = True
        return 100.0
    state.no_data = False
    kind = state.kind
    if kind == "velocity":
        if state.total_time <= 0:
            score = 100.0
        else:
            score = 100.0 * (1.0 - state.excess_time / state.total_time)
    elif kind == "error_collider":
        penalty = float(state.params.get("penalty", 10.0))
        score = 100.0 - penalty * state.entries
    elif kind == "angle":
        max_dev = float(state.params["max_deviation_deg"])
        score = 100.0 * (1.0 - (state.deviation_deg or 0.0) / max_dev)
    elif kind == "question":
        correct = set(state.params["correct"])
        score = 100.0 if set(state.chosen or []) == correct else 0.0
    elif kind == "custom":
        scorer = state.params.get("scorer")
        score = float(scorer(state.custom_samples)) if scorer else 100.0
    else:
        raise SchemaError(f"unknown factor kind '{kind}'")
    state.finalized_score = float(min(100.0, max(0.0, score)))
    return state.finalized_score


def aggregate_action(scores_weights) -> float:
    """Weighted average of (score, weight) pairs."""
    pairs = list(scores_weights)
    total_w = sum(w for _, w in pairs)
    if total_w <= 0:
        raise ConfigurationError("action has no positive scoring weights")
    return sum(s * w for s, w in pairs) / total_w
