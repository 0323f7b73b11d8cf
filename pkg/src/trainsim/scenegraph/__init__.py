"""Training scenegraph: a dynamic acyclic graph of scored Action nodes."""

from .engine import Scenegraph, load_scenario, perform_action, splice_alt_path, undo_action
from .model import (
    ActionEvent,
    ActionNode,
    ActionOutcome,
    ActionState,
    AltPathRule,
    Prototype,
)
from .document import scaffold_action, validate_document

__all__ = [
    "ActionEvent",
    "ActionNode",
    "ActionOutcome",
    "ActionState",
    "AltPathRule",
    "Prototype",
    "Scenegraph",
    "load_scenario",
    "perform_action",
    "scaffold_action",
    "splice_alt_path",
    "undo_action",
    "validate_document",
]
