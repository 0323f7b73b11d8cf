"""Scenegraph engine: load, perform, undo, splice.

The graph stays acyclic through every operation; the frontier (Active nodes)
is recomputed from completion state so it is always derivable, never drifted.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import DependencyError, OrderingError, SchemaError, ValidationError
from ..motor import quat_angle_deg
from .model import (
    ActionEvent,
    ActionNode,
    ActionOutcome,
    ActionState,
    AltPathRule,
    Prototype,
)


@dataclass
class Scenegraph:
    nodes: dict[str, ActionNode] = field(default_factory=dict)
    edges: set[tuple[str, str]] = field(default_factory=set)  # (prerequisite, dependent)
    alt_rules: list[AltPathRule] = field(default_factory=list)
    name: str = ""
    version: int = 1

    def prerequisites(self, node_id: str) -> list[str]:
        return sorted(pre for pre, dep in self.edges if dep == node_id)

    def successors(self, node_id: str) -> list[str]:
        return sorted(dep for pre, dep in self.edges if pre == node_id)

    @property
    def frontier(self) -> set[str]:
        return {nid for nid, n in self.nodes.items() if n.state == ActionState.ACTIVE}

    def completed(self) -> set[str]:
        return {nid for nid, n in self.nodes.items() if n.state == ActionState.COMPLETED}

    def all_completed(self) -> bool:
        return all(n.state == ActionState.COMPLETED for n in self.nodes.values())

    def topological_order(self) -> list[str]:
        """Kahn's algorithm; raises ValidationError with a cycle witness."""
        indeg = {nid: 0 for nid in self.nodes}
        for pre, dep in self.edges:
            indeg[dep] += 1
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            changed = False
            for dep in self.successors(nid):
                indeg[dep] -= 1
                if indeg[dep] == 0:
                    ready.append(dep)
                    changed = True
            if changed:
                ready.sort()
        if len(order) != len(self.nodes):
            witness = self._cycle_witness({nid for nid in self.nodes if nid not in order})
            raise ValidationError(f"scenario graph has a cycle: {' -> '.join(witness)}")
        return order

    def _cycle_witness(self, remaining: set[str]) -> list[str]:
        start = sorted(remaining)[0]
        path, seen = [start], {start}
        node = start
        while True:
            nxt = [d for d in self.successors(node) if d in remaining]
            node = sorted(nxt)[0]
            if node in seen:
                return path[path.index(node):] + [node]
            path.append(node)
            seen.add(node)

    def recompute_frontier(self) -> None:
        completed = self.completed()
        for node in self.nodes.values():
            if node.state == ActionState.COMPLETED:
                continue
            eligible = all(pre in completed for pre in self.prerequisites(node.id))
            node.state = ActionState.ACTIVE if eligible else ActionState.PENDING

    def check_invariants(self) -> None:
        self.topological_order()
        completed = self.completed()
        for nid in self.frontier:
            for pre in self.prerequisites(nid):
                if pre not in completed:
                    raise ValidationError(f"frontier node '{nid}' has incomplete prerequisite '{pre}'")

    def copy(self) -> "Scenegraph":
        return copy.deepcopy(self)


def load_scenario(document: dict) -> Scenegraph:
    """Build and validate a scenegraph from a scenario document (parsed JSON)."""
    from .document import parse_document

    graph = parse_document(document)
    graph.topological_order()
    graph.recompute_frontier()
    return graph


def _check_completion(node: ActionNode, ev: ActionEvent) -> tuple[bool, str | None]:
    p = node.params
    payload = ev.payload
    proto = node.prototype
    if proto == Prototype.INSERT:
        pose = payload.get("pose")
        if pose is None or "position" not in pose or "orientation" not in pose:
            raise SchemaError(f"insert event for '{node.id}' needs payload.pose")
        dpos = float(
            np.linalg.norm(np.asarray(pose["position"], dtype=float) - np.asarray(p["target_position"], dtype=float))
        )
        if dpos > p["position_tolerance"]:
            return False, "position tolerance exceeded"
        dang = quat_angle_deg(
            np.asarray(pose["orientation"], dtype=float),
            np.asarray(p["target_orientation"], dtype=float),
        )
        if dang > p["angle_tolerance"]:
            return False, "angle tolerance exceeded"
        return True, None
    if proto == Prototype.REMOVE:
        if "clearance" not in payload:
            raise SchemaError(f"remove event for '{node.id}' needs payload.clearance")
        if float(payload["clearance"]) < float(p["clearance"]):
            return False, "clearance not reached"
        return True, None
    if proto == Prototype.USE:
        if "dwell" not in payload:
            raise SchemaError(f"use event for '{node.id}' needs payload.dwell")
        if float(payload["dwell"]) < float(p["dwell"]):
            return False, "dwell time not reached"
        need = int(p.get("gesture_samples", 0))
        if need and len(payload.get("gesture_samples", [])) < need:
            return False, "gesture samples missing"
        return True, None
    if proto == Prototype.QUESTION:
        if "chosen" not in payload:
            raise SchemaError(f"question event for '{node.id}' needs payload.chosen")
        # questions always progress; correctness feeds scoring, not completion
        return True, None
    raise SchemaError(f"unknown prototype {proto}")


def perform_action(graph: Scenegraph, ev: ActionEvent) -> tuple[Scenegraph, ActionOutcome]:
    """Apply a completion event to a frontier node (mutates graph in place)."""
    node = graph.nodes.get(ev.node_id)
    if node is None:
        raise SchemaError(f"unknown action '{ev.node_id}'")
    if node.state != ActionState.ACTIVE:
        raise OrderingError(f"action '{ev.node_id}' is {node.state.value}, not active")
    ok, violation = _check_completion(node, ev)
    outcome = ActionOutcome(ev.node_id, ok, violation)
    spliced = None
    for rule in graph.alt_rules:
        if rule.matches(node, ev):
            splice_alt_path(graph, rule)
            rule.fired = True
            spliced = rule.name
            break  # at most one splice per event
    outcome.spliced_rule = spliced
    if ok:
        node.state = ActionState.COMPLETED
        graph.recompute_frontier()
    graph.check_invariants()
    return graph, outcome


def undo_action(graph: Scenegraph, node_id: str) -> Scenegraph:
    """Regress a completed node back to Active; successors revert to Pending."""
    node = graph.nodes.get(node_id)
    if node is None:
        raise SchemaError(f"unknown action '{node_id}'")
    if node.state != ActionState.COMPLETED:
        raise DependencyError(f"action '{node_id}' is not completed")
    blocked = [s for s in graph.successors(node_id) if graph.nodes[s].state == ActionState.COMPLETED]
    if blocked:
        raise DependencyError(f"cannot undo '{node_id}': completed successors {blocked}")
    node.state = ActionState.UNDONE
    node.undo_count += 1
    node.state = ActionState.ACTIVE
    graph.recompute_frontier()
    graph.check_invariants()
    return graph


def splice_alt_path(graph: Scenegraph, rule: AltPathRule) -> Scenegraph:
    """Insert a fragment after rule.splice_after, rejoining its old successors.

    Atomic: on any error the graph is left unchanged.
    """
    from .document import parse_fragment

    if rule.splice_after not in graph.nodes:
        raise SchemaError(f"splice_after node '{rule.splice_after}' does not exist")
    frag_nodes, frag_edges = parse_fragment(rule.subgraph)
    collisions = [nid for nid in frag_nodes if nid in graph.nodes]
    if collisions:
        raise SchemaError(f"fragment node ids already exist: {collisions}")

    frag_ids = set(frag_nodes)
    entries = sorted(nid for nid in frag_ids if not any(dep == nid for _, dep in frag_edges))
    exits = sorted(nid for nid in frag_ids if not any(pre == nid for pre, _ in frag_edges))
    old_successors = graph.successors(rule.splice_after)

    new_edges = set(graph.edges)
    for succ in old_successors:
        new_edges.discard((rule.splice_after, succ))
    new_edges |= frag_edges
    for entry in entries:
        new_edges.add((rule.splice_after, entry))
    for exit_id in exits:
        for succ in old_successors:
            new_edges.add((exit_id, succ))

    trial = Scenegraph(
        nodes={**graph.nodes, **frag_nodes},
        edges=new_edges,
        alt_rules=graph.alt_rules,
        name=graph.name,
        version=graph.version,
    )
    trial.topological_order()  # raises ValidationError on an induced cycle

    graph.nodes.update(frag_nodes)
    graph.edges.clear()
    graph.edges.update(new_edges)
    graph.recompute_frontier()
    return graph
