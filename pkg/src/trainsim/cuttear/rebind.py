"""Particle re-partitioning after topology changes.

Bindings never span a tear or cut: vertices rebind only against particles of
their own connected component, and particle neighbor edges crossing a
separation are removed.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..softbody.body import DISTANCE_CLAMP, SoftBody
from ..softbody.mesh import TriMesh
from .surgery import connected_components


def _particle_labels(sb: SoftBody, vertex_labels: np.ndarray) -> np.ndarray:
    """Each particle belongs to the component of its nearest surface vertex."""
    tree = cKDTree(sb.mesh.vertices)
    _, nearest = tree.query(sb.positions)
    return vertex_labels[nearest]


def rebind_particles(sb: SoftBody, affected_vertices=None, assume_connected: bool = False) -> SoftBody:
    """Recompute inverse-distance bindings for the affected vertices.

    Component-aware: binding candidates are restricted to particles in the
    vertex's own component; cross-component neighbor edges are dropped.
    assume_connected skips the labeling when the caller knows the body cannot
    have split (tears pinch at both ends, so they never separate a body).
    """
    n_vertices = len(sb.mesh.vertices)
    if assume_connected:
        vertex_labels = np.zeros(n_vertices, dtype=int)
        multi = False
    else:
        vertex_labels = connected_components(n_vertices, sb.mesh.triangles)
        multi = vertex_labels.max() > 0
    particle_labels = _particle_labels(sb, vertex_labels) if multi else None

    if affected_vertices is None:
        affected = range(n_vertices)
    else:
        affected = sorted(int(v) for v in affected_vertices)

    # grow binding arrays for newly appended vertices
    while len(sb.bind_indices) < n_vertices:
        sb.bind_indices.append(np.empty(0, dtype=int))
        sb.bind_weights.append(np.empty(0))

    bind_radius = sb.params.bind_radius
    if multi:
        trees = {}
        for label in np.unique(particle_labels):
            idx = np.where(particle_labels == label)[0]
            trees[label] = (idx, cKDTree(sb.anchors[idx]) if len(idx) else None)
    else:
        all_tree = cKDTree(sb.anchors)

    for v in affected:
        pos = sb.rest_vertices[v]
        if multi:
            idx, tree = trees.get(vertex_labels[v], (np.empty(0, dtype=int), None))
            if tree is None:
                sb.bind_indices[v] = np.empty(0, dtype=int)
                sb.bind_weights[v] = np.empty(0)
                continue
            local = tree.query_ball_point(pos, bind_radius)
            group = idx[sorted(local)]
        else:
            group = np.array(sorted(all_tree.query_ball_point(pos, bind_radius)), dtype=int)
        if len(group) == 0:
            sb.bind_indices[v] = np.empty(0, dtype=int)
            sb.bind_weights[v] = np.empty(0)
            continue
        d = np.linalg.norm(sb.anchors[group] - pos, axis=1)
        d = np.maximum(d, DISTANCE_CLAMP)
        inv = 1.0 / d
        sb.bind_indices[v] = np.asarray(group, dtype=int)
        sb.bind_weights[v] = inv / inv.sum()

    if multi:
        for i, ns in enumerate(sb.neighbors):
            sb.neighbors[i] = {j for j in ns if particle_labels[j] == particle_labels[i]}
    return sb


def split_components(sb: SoftBody) -> list[SoftBody]:
    """Split a soft body into one body per connected surface component."""
    n_vertices = len(sb.mesh.vertices)
    vertex_labels = connected_components(n_vertices, sb.mesh.triangles)
    n_components = int(vertex_labels.max()) + 1
    if n_components == 1:
        return [sb]
    particle_labels = _particle_labels(sb, vertex_labels)

    bodies = []
    for label in range(n_components):
        vmask = vertex_labels == label
        vmap = -np.ones(n_vertices, dtype=int)
        vmap[vmask] = np.arange(int(vmask.sum()))
        tris = np.array(
            [t for t in sb.mesh.triangles if vertex_labels[t[0]] == label], dtype=np.int64
        ).reshape(-1, 3)
        tris = vmap[tris]
        pmask = particle_labels == label
        pmap = -np.ones(sb.particle_count, dtype=int)
        pmap[pmask] = np.arange(int(pmask.sum()))
        neighbors = [
            {int(pmap[j]) for j in sb.neighbors[i] if pmask[j]}
            for i in range(sb.particle_count)
            if pmask[i]
        ]
        body = SoftBody(
            mesh=TriMesh(sb.mesh.vertices[vmask].copy(), tris),
            params=sb.params,
            anchors=sb.anchors[pmask].copy(),
            positions=sb.positions[pmask].copy(),
            velocities=sb.velocities[pmask].copy(),
            neighbors=neighbors,
            bind_indices=[np.empty(0, dtype=int) for _ in range(int(vmask.sum()))],
            bind_weights=[np.empty(0) for _ in range(int(vmask.sum()))],
            rest_vertices=sb.rest_vertices[vmask].copy(),
        )
        rebind_particles(body)
        bodies.append(body)
    return bodies
