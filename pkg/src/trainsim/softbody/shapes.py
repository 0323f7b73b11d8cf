"""Procedural benchmark meshes.

The liver-scale mesh is a jittered lat-long ellipsoid tuned to the density
class of a ~500-vertex / 768-triangle organ model (about 20 cm across); the
heart-scale mesh is the same construction one density step up.  Jitter keeps
cuts away from exact vertex hits, which real scanned assets never offer.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def uv_sphere(
    segments: int = 32,
    rows: int = 12,
    radii=(1.0, 1.0, 1.0),
    jitter: float = 0.0,
    seed: int = 0,
) -> TriMesh:
    """Closed lat-long ellipsoid: 2*segments*rows triangles."""
    rng = np.random.default_rng(seed)
    radii = np.asarray(radii, dtype=float)
    verts = [np.array([0.0, 0.0, 1.0])]
    for i in range(1, rows):
        phi = np.pi * i / rows
        for j in range(segments):
            theta = 2 * np.pi * j / segments
            p = np.array(
                [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
            )
            if jitter > 0:
                p = p + rng.uniform(-jitter, jitter, size=3)
                p = p / np.linalg.norm(p)
            verts.append(p)
    verts.append(np.array([0.0, 0.0, -1.0]))
    vertices = np.array(verts) * radii

    tris = []
    for j in range(segments):
        tris.append([0, 1 + j, 1 + (j + 1) % segments])
    for i in range(rows - 2):
        base = 1 + i * segments
        nxt = base + segments
        for j in range(segments):
            j2 = (j + 1) % segments
            tris.append([base + j, nxt + j, nxt + j2])
            tris.append([base + j, nxt + j2, base + j2])
    south = len(vertices) - 1
    base = 1 + (rows - 2) * segments
    for j in range(segments):
        tris.append([south, base + (j + 1) % segments, base + j])
    return TriMesh(vertices, np.array(tris))


def liver_mesh(seed: int = 0) -> TriMesh:
    """Liver-scale ellipsoid: 768 triangles, ~0.2 m along its long axis."""
    return uv_sphere(segments=32, rows=13, radii=(0.10, 0.07, 0.05), jitter=0.035, seed=seed)


def heart_mesh(seed: int = 0) -> TriMesh:
    """Heart-scale ellipsoid, one density step above the liver model."""
    return uv_sphere(segments=72, rows=34, radii=(0.06, 0.05, 0.07), jitter=0.02, seed=seed)


def cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned cube surface, 12 triangles."""
    h = size / 2.0
    c = np.asarray(center, dtype=float)
    corners = np.array(
        [
            [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
            [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
        ]
    ) + c
    quads = [
        (0, 3, 2, 1),  # bottom (z-)
        (4, 5, 6, 7),  # top (z+)
        (0, 1, 5, 4),  # y-
        (2, 3, 7, 6),  # y+
        (1, 2, 6, 5),  # x+
        (3, 0, 4, 7),  # x-
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append([a, b, cc])
        tris.append([a, cc, d])
    return TriMesh(corners, np.array(tris))


def flat_grid(nx: int = 4, ny: int = 4, size: float = 1.0, z: float = 0.0) -> TriMesh:
    """Open planar grid in the z=const plane, 2*nx*ny triangles."""
    xs = np.linspace(-size / 2, size / 2, nx + 1)
    ys = np.linspace(-size / 2, size / 2, ny + 1)
    verts = np.array([[x, y, z] for y in ys for x in xs])
    tris = []
    for j in range(ny):
        for i in range(nx):
            v0 = j * (nx + 1) + i
            v1 = v0 + 1
            v2 = v0 + (nx + 1)
            v3 = v2 + 1
            tris.append([v0, v1, v3])
            tris.append([v0, v3, v2])
    return TriMesh(verts, np.array(tris))
