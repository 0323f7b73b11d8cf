"""Soft body = surface mesh + particle control layer.

Particles sampled on the surface are connected when closer than
connect_factor * r; vertices bind to every particle within bind_radius with
weights proportional to 1/distance, normalized per vertex.  Displacing a
particle drags its one-ring neighbors by beta * min(1, r/d) of the motion and
re-evaluates bound vertices; stepping relaxes particles back to their anchors
with velocity proportional to displacement.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidInputError, RangeError
from .mesh import TriMesh

DISTANCE_CLAMP = 1e-6  # m, guards the 1/d singularity


@dataclass
class SoftBodyParams:
    radius: float
    connect_factor: float = 2.5
    bind_radius: float | None = None  # defaults to 2 * radius
    stiffness: float = 10.0  # 1/s
    propagation: float = 0.5  # beta
    damping: float = 0.0
    second_order: bool = False

    def __post_init__(self):
        if self.bind_radius is None:
            self.bind_radius = 2.0 * self.radius


@dataclass(eq=False)
class SoftBody:
    mesh: TriMesh
    params: SoftBodyParams
    anchors: np.ndarray  # (P, 3) initial particle positions
    positions: np.ndarray  # (P, 3) current particle positions
    velocities: np.ndarray  # (P, 3)
    neighbors: list[set[int]]  # symmetric particle adjacency
    bind_indices: list[np.ndarray]  # per vertex: particle indices ((0,) array when unbound)
    bind_weights: list[np.ndarray]  # per vertex: weights summing to 1
    rest_vertices: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.rest_vertices is None:
            self.rest_vertices = self.mesh.vertices.copy()

    @property
    def particle_count(self) -> int:
        return len(self.anchors)

    def unbound_vertices(self) -> np.ndarray:
        return np.array([i for i, idx in enumerate(self.bind_indices) if len(idx) == 0], dtype=int)

    def vertex_offsets(self) -> np.ndarray:
        """Weighted particle displacements per vertex (zero for unbound)."""
        offsets = np.zeros_like(self.rest_vertices)
        disp = self.positions - self.anchors
        for v, (idx, w) in enumerate(zip(self.bind_indices, self.bind_weights)):
            if len(idx):
                offsets[v] = w @ disp[idx]
        return offsets

    def refresh_vertices(self) -> None:
        self.mesh.vertices = self.rest_vertices + self.vertex_offsets()

    def copy(self) -> "SoftBody":
        return SoftBody(
            mesh=self.mesh.copy(),
            params=replace(self.params),
            anchors=self.anchors.copy(),
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            neighbors=[set(n) for n in self.neighbors],
            bind_indices=[i.copy() for i in self.bind_indices],
            bind_weights=[w.copy() for w in self.bind_weights],
            rest_vertices=self.rest_vertices.copy(),
        )


def compute_bindings(
    vertices: np.ndarray, anchors: np.ndarray, bind_radius: float
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Inverse-distance weights over particles within bind_radius of each vertex."""
    tree = cKDTree(anchors)
    groups = tree.query_ball_point(vertices, bind_radius)
    bind_indices, bind_weights = [], []
    for v, group in enumerate(groups):
        if not group:
            bind_indices.append(np.empty(0, dtype=int))
            bind_weights.append(np.empty(0))
            continue
        idx = np.array(sorted(group), dtype=int)
        d = np.linalg.norm(anchors[idx] - vertices[v], axis=1)
        d = np.maximum(d, DISTANCE_CLAMP)
        inv = 1.0 / d
        bind_indices.append(idx)
        bind_weights.append(inv / inv.sum())
    return bind_indices, bind_weights


def build_softbody(mesh: TriMesh, anchors: np.ndarray, params: SoftBodyParams) -> SoftBody:
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 3)
    connect_radius = params.connect_factor * params.radius
    tree = cKDTree(anchors)
    pairs = tree.query_pairs(connect_radius, output_type="ndarray")
    neighbors: list[set[int]] = [set() for _ in range(len(anchors))]
    for i, j in pairs:
        # strict threshold: |ai - aj| < connect_factor * r
        if np.linalg.norm(anchors[i] - anchors[j]) < connect_radius:
            neighbors[int(i)].add(int(j))
            neighbors[int(j)].add(int(i))
    bind_indices, bind_weights = compute_bindings(mesh.vertices, anchors, params.bind_radius)
    return SoftBody(
        mesh=mesh,
        params=params,
        anchors=anchors,
        positions=anchors.copy(),
        velocities=np.zeros_like(anchors),
        neighbors=neighbors,
        bind_indices=bind_indices,
        bind_weights=bind_weights,
    )


def displace_particle(sb: SoftBody, index: int, delta) -> SoftBody:
    """Move one particle; one-ring neighbors follow by beta * min(1, r/d) of delta."""
    delta = np.asarray(delta, dtype=float)
    if not 0 <= index < sb.particle_count:
        raise RangeError(f"particle index {index} out of range")
    r = sb.params.radius
    beta = sb.params.propagation
    sb.positions[index] = sb.positions[index] + delta
    for j in sorted(sb.neighbors[index]):
        d = float(np.linalg.norm(sb.positions[index] - delta - sb.positions[j]))
        d = max(d, DISTANCE_CLAMP)
        factor = beta * min(1.0, r / d)
        sb.positions[j] = sb.positions[j] + factor * delta
    sb.refresh_vertices()
    return sb


def step(sb: SoftBody, dt: float) -> SoftBody:
    """Fixed-step spring return: velocity proportional to displacement from anchor."""
    if not 0 < dt <= 1.0 / 30.0:
        raise InvalidInputError(f"dt must lie in (0, 1/30], got {dt}")
    k = sb.params.stiffness
    offset = sb.positions - sb.anchors
    if sb.params.second_order:
        accel = -k * offset - sb.params.damping * sb.velocities
        sb.velocities = sb.velocities + accel * dt
    else:
        sb.velocities = -k * offset
    sb.positions = sb.positions + sb.velocities * dt
    sb.refresh_vertices()
    return sb
