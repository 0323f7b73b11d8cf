"""Automatic hand-posture solving: interpolate a skeleton until bones touch the object."""

from .skeleton import Bone, GraspMovement, HandSkeleton, load_hand_file
from .solver import GraspResult, capsule_mesh_contact, solve_grasp

__all__ = [
    "Bone",
    "GraspMovement",
    "HandSkeleton",
    "load_hand_file",
    "GraspResult",
    "capsule_mesh_contact",
    "solve_grasp",
]
