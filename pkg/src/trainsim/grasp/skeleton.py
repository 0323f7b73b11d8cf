"""Hand skeletons: a joint tree with capsule bones, no fixed finger arity.

A joint's bone capsule runs from the joint origin along its local +x axis.
Grasp movements store per-joint local rotations for just two poses (initial
and final); everything between them is interpolated at solve time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError
from ..motor import Pose, quat_multiply, quat_rotate


@dataclass
class Bone:
    name: str
    parent: int  # -1 for the root
    offset: np.ndarray  # local translation from parent joint (rest)
    rest_rotation: np.ndarray  # local rest orientation (unit quaternion)
    capsule_radius: float
    capsule_length: float

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float)
        self.rest_rotation = np.asarray(self.rest_rotation, dtype=float)


@dataclass
class HandSkeleton:
    bones: list[Bone]

    def __post_init__(self):
        roots = [i for i, b in enumerate(self.bones) if b.parent < 0]
        if len(roots) != 1:
            raise SchemaError(f"skeleton needs exactly one root, found {len(roots)}")
        for i, bone in enumerate(self.bones):
            if bone.parent >= i:
                raise SchemaError("bones must be listed parents-first")

    def __len__(self) -> int:
        return len(self.bones)

    def children(self, index: int) -> list[int]:
        return [i for i, b in enumerate(self.bones) if b.parent == index]

    def descendants(self, index: int) -> set[int]:
        out = set()
        stack = [index]
        while stack:
            node = stack.pop()
            for child in self.children(node):
                out.add(child)
                stack.append(child)
        return out

    def forward_kinematics(
        self, local_rotations: np.ndarray, root: Pose
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Global (position, orientation) per joint from per-joint local rotations."""
        out: list[tuple[np.ndarray, np.ndarray]] = []
        for i, bone in enumerate(self.bones):
            if bone.parent < 0:
                parent_pos, parent_rot = root.position, root.orientation
            else:
                parent_pos, parent_rot = out[bone.parent]
            pos = parent_pos + quat_rotate(parent_rot, bone.offset)
            rot = quat_multiply(parent_rot, local_rotations[i])
            rot = rot / np.linalg.norm(rot)
            out.append((pos, rot))
        return out

    def bone_capsule(self, index: int, pos: np.ndarray, rot: np.ndarray):
        """World capsule segment (p0, p1, radius) for one bone."""
        bone = self.bones[index]
        tip = pos + quat_rotate(rot, np.array([bone.capsule_length, 0.0, 0.0]))
        return pos, tip, bone.capsule_radius


@dataclass
class GraspMovement:
    initial: np.ndarray  # (J, 4) local rotations
    final: np.ndarray  # (J, 4)

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=float).reshape(-1, 4)
        self.final = np.asarray(self.final, dtype=float).reshape(-1, 4)
        if self.initial.shape != self.final.shape:
            raise SchemaError("initial and final poses must cover the same joints")

    def check_matches(self, skeleton: HandSkeleton) -> None:
        if len(self.initial) != len(skeleton):
            raise SchemaError(
                f"movement covers {len(self.initial)} joints, skeleton has {len(skeleton)}"
            )


def load_hand_file(path_or_obj) -> tuple[HandSkeleton, GraspMovement]:
    """Load the JSON hand file: joint tree, capsules, initial/final local rotations."""
    if isinstance(path_or_obj, dict):
        obj = path_or_obj
    else:
        with open(path_or_obj) as fh:
            obj = json.load(fh)
    try:
        bones = [
            Bone(
                name=j["name"],
                parent=int(j["parent"]),
                offset=j["offset"],
                rest_rotation=j.get("rest_rotation", [1, 0, 0, 0]),
                capsule_radius=float(j["capsule_radius"]),
                capsule_length=float(j["capsule_length"]),
            )
            for j in obj["joints"]
        ]
        movement = GraspMovement(obj["initial_pose"], obj["final_pose"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed hand file: {exc}") from exc
    skeleton = HandSkeleton(bones)
    movement.check_matches(skeleton)
    return skeleton, movement
