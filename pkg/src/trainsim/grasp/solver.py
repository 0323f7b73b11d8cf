"""Grasp-pose solving.

The whole hand interpolates from the initial to the final pose as one global
parameter s sweeps 0 to 1 in steps of 1/60.  The first time a bone's capsule
touches the object (within the contact offset), its contact parameter is
refined by bisection and the bone freezes there; descendants keep closing.
A joint also stops when its advance would push an already-frozen descendant
past the surface itself, so the result pose never penetrates beyond the
offset band plus the bisection tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError
from ..geom3 import segment_mesh_distance
from ..motor import Pose, quat_slerp
from ..softbody.mesh import TriMesh
from .skeleton import GraspMovement, HandSkeleton

STEP = 1.0 / 60.0
BISECTION_ITERS = 8
CONTACT_OFFSET = 0.002  # m


@dataclass
class GraspResult:
    rotations: np.ndarray  # (J, 4) final local rotations
    contact: np.ndarray  # (J,) bool
    contact_param: np.ndarray  # (J,) s in [0, 1]

    def frozen_joints(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.contact)]


def capsule_mesh_contact(
    p0: np.ndarray,
    p1: np.ndarray,
    radius: float,
    mesh: TriMesh,
    offset: float = CONTACT_OFFSET,
) -> tuple[bool, float]:
    """True when the capsule segment comes within radius + offset of any triangle."""
    d = segment_mesh_distance(
        np.asarray(p0, float), np.asarray(p1, float), mesh.vertices, mesh.triangles
    )
    return d < radius + offset, d


def _pose_at(movement: GraspMovement, s: float) -> np.ndarray:
    out = np.empty_like(movement.initial)
    for j in range(len(movement.initial)):
        out[j] = quat_slerp(movement.initial[j], movement.final[j], s)
    return out


class _SolveState:
    def __init__(self, skeleton, movement, obj, root, offset):
        self.skeleton = skeleton
        self.movement = movement
        self.obj = obj
        self.root = root
        self.offset = offset
        n = len(skeleton)
        self.frozen = np.zeros(n, dtype=bool)
        self.frozen_s = np.ones(n)
        self.descendants = [skeleton.descendants(j) for j in range(n)]

    def rotations_at(self, s: float) -> np.ndarray:
        rot = _pose_at(self.movement, s)
        for j in np.flatnonzero(self.frozen):
            rot[j] = quat_slerp(self.movement.initial[j], self.movement.final[j], self.frozen_s[j])
        return rot

    def blocked(self, j: int, s: float) -> bool:
        """Joint j cannot advance past s: own capsule touches, or a frozen
        descendant gets pushed beyond the surface itself."""
        fk = self.skeleton.forward_kinematics(self.rotations_at(s), self.root)
        p0, p1, radius = self.skeleton.bone_capsule(j, *fk[j])
        d = segment_mesh_distance(p0, p1, self.obj.vertices, self.obj.triangles)
        if d < radius + self.offset:
            return True
        for k in self.descendants[j]:
            if not self.frozen[k]:
                continue
            p0, p1, radius = self.skeleton.bone_capsule(k, *fk[k])
            d = segment_mesh_distance(p0, p1, self.obj.vertices, self.obj.triangles)
            if d < radius:  # hard contact: offset band exhausted
                return True
        return False


def solve_grasp(
    skeleton: HandSkeleton,
    movement: GraspMovement,
    obj: TriMesh,
    root: Pose,
    offset: float = CONTACT_OFFSET,
) -> GraspResult:
    movement.check_matches(skeleton)
    if not len(obj.triangles):
        raise SchemaError("grasp target mesh is empty")
    n = len(skeleton)
    state = _SolveState(skeleton, movement, obj, root, offset)

    # bones already in contact at s = 0 freeze immediately at the initial pose
    fk0 = skeleton.forward_kinematics(state.rotations_at(0.0), root)
    for j in range(n):
        p0, p1, radius = skeleton.bone_capsule(j, *fk0[j])
        hit, _ = capsule_mesh_contact(p0, p1, radius, obj, offset)
        if hit:
            state.frozen[j] = True
            state.frozen_s[j] = 0.0

    s_prev = 0.0
    steps = int(round(1.0 / STEP))
    for k in range(1, steps + 1):
        if state.frozen.all():
            break
        s = min(1.0, k * STEP)
        for j in range(n):  # parents-first by skeleton ordering
            if state.frozen[j]:
                continue
            if not state.blocked(j, s):
                continue
            lo, hi = s_prev, s
            for _ in range(BISECTION_ITERS):
                mid = 0.5 * (lo + hi)
                if state.blocked(j, mid):
                    hi = mid
                else:
                    lo = mid
            state.frozen[j] = True
            state.frozen_s[j] = hi
        s_prev = s

    rotations = _pose_at(movement, 1.0)
    for j in np.flatnonzero(state.frozen):
        rotations[j] = quat_slerp(movement.initial[j], movement.final[j], state.frozen_s[j])
    return GraspResult(
        rotations=rotations, contact=state.frozen, contact_param=state.frozen_s
    )
