"""Scenario document: versioned JSON schema, validation, scaffolding.

Document shape (version 1):

    {
      "version": 1,
      "name": "knee-prep",
      "actions": [
        {"id": "a1", "prototype": "insert",
         "params": {"target_position": [0,0,0], "target_orientation": [1,0,0,0],
                    "position_tolerance": 0.005, "angle_tolerance": 5.0},
         "scoring": [{"kind": "angle", "weight": 1.0, "params": {...}}],
         "parallel_group": null},
        ...
      ],
      "edges": [["a1", "a2"], ...],
      "alt_paths": [
        {"name": "remediation", "trigger": {"node": "a2", "condition": "wrong_answer"},
         "splice_after": "a2", "subgraph": {"actions": [...], "edges": [...]}}
      ]
    }
"""

from __future__ import annotations

from typing import Any

from ..errors import SchemaError, ValidationError
from .model import ActionNode, AltPathRule, Prototype, ScoringAttachment

SCHEMA_VERSION = 1

KNOWN_FACTOR_KINDS = {"velocity", "error_collider", "angle", "question", "custom"}


def _parse_action(obj: dict) -> ActionNode:
    if not isinstance(obj, dict) or "id" not in obj or "prototype" not in obj:
        raise SchemaError("each action needs 'id' and 'prototype'")
    try:
        proto = Prototype(obj["prototype"])
    except ValueError as exc:
        raise SchemaError(f"unknown prototype '{obj['prototype']}'") from exc
    scoring = []
    for s in obj.get("scoring", []):
        kind = s.get("kind")
        if kind not in KNOWN_FACTOR_KINDS:
            raise SchemaError(f"unknown scoring factor kind '{kind}'")
        scoring.append(ScoringAttachment(kind, float(s.get("weight", 1.0)), s.get("params", {})))
    node = ActionNode(
        id=str(obj["id"]),
        prototype=proto,
        params=dict(obj.get("params", {})),
        scoring=scoring,
        parallel_group=obj.get("parallel_group"),
    )
    node.validate_params()
    return node


def _parse_edges(raw, node_ids: set[str]) -> set[tuple[str, str]]:
    edges = set()
    for e in raw:
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise SchemaError(f"edge must be a [prerequisite, dependent] pair, got {e!r}")
        pre, dep = str(e[0]), str(e[1])
        if pre not in node_ids or dep not in node_ids:
            raise SchemaError(f"dangling edge {pre} -> {dep}")
        edges.add((pre, dep))
    return edges


def parse_fragment(subgraph: dict) -> tuple[dict[str, ActionNode], set[tuple[str, str]]]:
    actions = subgraph.get("actions", [])
    if not actions:
        raise SchemaError("alt-path fragment has no actions")
    nodes = {}
    for raw in actions:
        node = _parse_action(raw)
        if node.id in nodes:
            raise SchemaError(f"duplicate action id '{node.id}' in fragment")
        nodes[node.id] = node
    edges = _parse_edges(subgraph.get("edges", []), set(nodes))
    return nodes, edges


def parse_document(document: dict):
    from .engine import Scenegraph

    if not isinstance(document, dict):
        raise SchemaError("scenario document must be a JSON object")
    version = document.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported scenario version {version}")
    actions = document.get("actions", [])
    if not actions:
        raise SchemaError("scenario has no actions")
    nodes: dict[str, ActionNode] = {}
    for raw in actions:
        node = _parse_action(raw)
        if node.id in nodes:
            raise SchemaError(f"duplicate action id '{node.id}'")
        nodes[node.id] = node
    edges = _parse_edges(document.get("edges", []), set(nodes))

    rules = []
    for raw in document.get("alt_paths", []):
        trigger = raw.get("trigger", {})
        if "node" not in trigger or "condition" not in trigger:
            raise SchemaError("alt-path trigger needs 'node' and 'condition'")
        if raw.get("splice_after") is None:
            raise SchemaError("alt-path needs 'splice_after'")
        rules.append(
            AltPathRule(
                name=raw.get("name", f"rule-{len(rules)}"),
                trigger_node=str(trigger["node"]),
                condition=str(trigger["condition"]),
                threshold=float(trigger.get("threshold", 0.0)),
                subgraph=raw.get("subgraph", {}),
                splice_after=str(raw["splice_after"]),
            )
        )
    return Scenegraph(
        nodes=nodes,
        edges=edges,
        alt_rules=rules,
        name=str(document.get("name", "")),
        version=version,
    )


def validate_document(document: dict) -> tuple[int, list[str]]:
    """Validate without keeping the graph.

    Returns (exit_code, messages): 0 ok, 2 schema error, 3 cycle.
    """
    try:
        graph = parse_document(document)
        graph.topological_order()
    except SchemaError as exc:
        return 2, [str(exc)]
    except ValidationError as exc:
        return 3, [str(exc)]
    return 0, []


def scaffold_action(name: str, prototype: str, objects: list[str]) -> dict:
    """Emit a skeleton action node (with an empty scoring spec) from object names."""
    try:
        proto = Prototype(prototype)
    except ValueError as exc:
        raise SchemaError(f"unknown prototype '{prototype}'") from exc
    params: dict[str, Any]
    if proto == Prototype.INSERT:
        params = {
            "target_position": [0.0, 0.0, 0.0],
            "target_orientation": [1.0, 0.0, 0.0, 0.0],
            "position_tolerance": 0.005,
            "angle_tolerance": 5.0,
            "object_id": objects[0] if objects else "object",
        }
    elif proto == Prototype.REMOVE:
        params = {"object_id": objects[0] if objects else "object", "clearance": 0.05}
    elif proto == Prototype.USE:
        params = {
            "tool_id": objects[0] if objects else "tool",
            "target_id": objects[1] if len(objects) > 1 else "target",
            "dwell": 1.0,
            "gesture_samples": 0,
        }
    else:
        params = {"prompt": f"Question about {', '.join(objects) or 'the step'}?",
                  "options": ["A", "B"], "correct": ["A"]}
    return {
        "id": name,
        "prototype": proto.value,
        "params": params,
        "scoring": [],
        "parallel_group": None,
    }
