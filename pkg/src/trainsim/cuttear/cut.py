"""Blade-sweep cutting.

A cut path is a chain of planar quads, each swept between two successive
blade poses (top/bottom edge endpoints).  Quads are applied to the mesh one
by one — this is what makes consecutive strokes progressive — and the body
is split into components afterwards when the sweep fully separates it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..softbody.body import SoftBody
from .rebind import rebind_particles, split_components
from .stats import CutStats
from .surgery import MeshSurgeon

CONTINUITY_TOL = 1e-9


@dataclass
class CutQuad:
    """Swept blade segment: corners ordered top0, bottom0, bottom1, top1."""

    corners: np.ndarray  # (4, 3)

    def __post_init__(self):
        self.corners = np.asarray(self.corners, dtype=float).reshape(4, 3)

    @property
    def leading_edge(self) -> np.ndarray:
        return self.corners[[0, 1]]

    @property
    def trailing_edge(self) -> np.ndarray:
        return self.corners[[3, 2]]


@dataclass
class CutPath:
    segments: list[CutQuad]

    def __post_init__(self):
        if not self.segments:
            raise InvalidInputError("cut path needs at least one segment")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if not np.allclose(prev.trailing_edge, nxt.leading_edge, atol=CONTINUITY_TOL):
                raise InvalidInputError("consecutive cut segments must share a blade edge")

    @classmethod
    def from_blade_sweep(cls, top_points, bottom_points) -> "CutPath":
        top = np.asarray(top_points, dtype=float).reshape(-1, 3)
        bottom = np.asarray(bottom_points, dtype=float).reshape(-1, 3)
        if len(top) != len(bottom) or len(top) < 2:
            raise InvalidInputError("blade sweep needs matching top/bottom pose points (>= 2)")
        segments = [
            CutQuad(np.array([top[i], bottom[i], bottom[i + 1], top[i + 1]]))
            for i in range(len(top) - 1)
        ]
        return cls(segments)

    @classmethod
    def full_plane(cls, mesh, normal, offset: float, strokes: int = 1) -> "CutPath":
        """A sweep spanning the whole mesh cross-section at plane n.x = offset."""
        normal = np.asarray(normal, dtype=float)
        normal = normal / np.linalg.norm(normal)
        # in-plane axes
        helper = np.array([1.0, 0.0, 0.0])
        if abs(normal @ helper) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        u = np.cross(normal, helper)
        u /= np.linalg.norm(u)
        v = np.cross(normal, u)
        center = mesh.vertices.mean(axis=0)
        origin = center + (offset - float(center @ normal)) * normal
        half = mesh.diameter()  # generous: quads extend beyond the surface
        tops, bottoms = [], []
        for k in range(strokes + 1):
            s = -half + 2.0 * half * k / strokes
            tops.append(origin + s * u + half * v)
            bottoms.append(origin + s * u - half * v)
        return cls.from_blade_sweep(tops, bottoms)


def cut(sb: SoftBody, path: CutPath) -> tuple[list[SoftBody], CutStats]:
    """Apply a blade sweep; returns resulting bodies and phase timings."""
    sb.mesh.require_manifold()
    stats = CutStats()
    t0 = time.perf_counter()
    surgeon = MeshSurgeon(sb.mesh.vertices, sb.rest_vertices, sb.mesh.triangles)
    for quad in path.segments:
        stats.intersection_point_count += surgeon.cut_with_quad(quad.corners)
    t1 = time.perf_counter()
    stats.perform_ms = (t1 - t0) * 1000.0

    if stats.intersection_point_count == 0:
        return [sb], stats

    n_before = len(sb.mesh.vertices)
    sb.mesh.vertices = surgeon.vertex_array()
    sb.rest_vertices = surgeon.rest_array()
    sb.mesh.triangles = surgeon.triangle_array()

    bodies = split_components(sb)
    if len(bodies) == 1:
        rebind_particles(sb, affected_vertices=range(n_before, len(sb.mesh.vertices)))
        sb.refresh_vertices()
    else:
        for body in bodies:
            body.refresh_vertices()
    stats.update_particles_ms = (time.perf_counter() - t1) * 1000.0
    return bodies, stats
