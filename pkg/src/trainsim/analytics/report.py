"""Session report: per-action factor scores, weighted action scores, session total."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ConfigurationError
from .factors import aggregate_action

REPORT_VERSION = 1


@dataclass
class FactorScore:
    kind: str
    weight: float
    score: float
    no_data: bool = False

    def to_json(self) -> dict:
        return {"kind": self.kind, "weight": self.weight, "score": self.score, "no_data": self.no_data}

    @classmethod
    def from_json(cls, obj) -> "FactorScore":
        return cls(obj["kind"], obj["weight"], obj["score"], obj.get("no_data", False))


@dataclass
class ActionScore:
    action_id: str
    factors: list[FactorScore]
    score: float
    completed_at_us: int = 0

    @classmethod
    def from_factors(cls, action_id: str, factors: list[FactorScore], completed_at_us: int = 0):
        score = aggregate_action((f.score, f.weight) for f in factors)
        return cls(action_id, factors, score, completed_at_us)

    def to_json(self) -> dict:
        return {
            "action_id": self.action_id,
            "factors": [f.to_json() for f in self.factors],
            "score": self.score,
            "completed_at_us": self.completed_at_us,
        }

    @classmethod
    def from_json(cls, obj) -> "ActionScore":
        return cls(
            obj["action_id"],
            [FactorScore.from_json(f) for f in obj["factors"]],
            obj["score"],
            obj.get("completed_at_us", 0),
        )


@dataclass
class SessionReport:
    session_id: str
    scenario: str = ""
    actions: list[ActionScore] = field(default_factory=list)
    started_us: int = 0
    finished_us: int = 0
    total_mode: str = "mean"  # or "weighted" (by factor weight sums)

    @property
    def total_score(self) -> float:
        if not self.actions:
            return 0.0
        if self.total_mode == "weighted":
            weights = [sum(f.weight for f in a.factors) or 1.0 for a in self.actions]
            return sum(a.score * w for a, w in zip(self.actions, weights)) / sum(weights)
        if self.total_mode != "mean":
            raise ConfigurationError(f"unknown total_mode '{self.total_mode}'")
        return sum(a.score for a in self.actions) / len(self.actions)

    def to_json(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "session_id": self.session_id,
            "scenario": self.scenario,
            "started_us": self.started_us,
            "finished_us": self.finished_us,
            "total_mode": self.total_mode,
            "actions": [a.to_json() for a in self.actions],
            "total_score": self.total_score,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "SessionReport":
        report = cls(
            session_id=obj["session_id"],
            scenario=obj.get("scenario", ""),
            actions=[ActionScore.from_json(a) for a in obj["actions"]],
            started_us=obj.get("started_us", 0),
            finished_us=obj.get("finished_us", 0),
            total_mode=obj.get("total_mode", "mean"),
        )
        return report

    @classmethod
    def loads(cls, text: str) -> "SessionReport":
        return cls.from_json(json.loads(text))
