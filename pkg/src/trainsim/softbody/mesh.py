"""Indexed triangle meshes and the minimal OBJ subset (v / f lines, triangles only)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, UnsupportedTopologyError

DEGENERATE_AREA = 1e-12  # m^2


@dataclass(eq=False)
class TriMesh:
    vertices: np.ndarray  # (V, 3) float64, meters
    triangles: np.ndarray  # (T, 3) int64

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise InputError("triangle index out of range")

    def triangle_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def total_area(self) -> float:
        return float(self.triangle_areas().sum())

    def triangle_normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        n = np.cross(b - a, c - a)
        lengths = np.linalg.norm(n, axis=1, keepdims=True)
        lengths[lengths < 1e-30] = 1.0
        return n / lengths

    def drop_degenerate(self) -> "TriMesh":
        """Remove zero-area triangles (load cleanup)."""
        keep = self.triangle_areas() > DEGENERATE_AREA
        return TriMesh(self.vertices.copy(), self.triangles[keep])

    def edge_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for tri in self.triangles:
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                key = (a, b) if a < b else (b, a)
                counts[key] = counts.get(key, 0) + 1
        return counts

    def is_manifold(self) -> bool:
        """Manifold-with-boundary: every edge borders at most two triangles."""
        return all(c <= 2 for c in self.edge_counts().values())

    def require_manifold(self) -> None:
        if not self.is_manifold():
            raise UnsupportedTopologyError("mesh has edges shared by more than two triangles")

    def diameter(self) -> float:
        if not len(self.vertices):
            return 0.0
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def copy(self) -> "TriMesh":
        return TriMesh(self.vertices.copy(), self.triangles.copy())


def load_obj(path_or_text) -> TriMesh:
    """Parse the `v`/`f` OBJ subset; faces must be triangles."""
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
    elif "\n" in str(path_or_text) or str(path_or_text).lstrip().startswith(("v ", "f ", "#")):
        text = str(path_or_text)
    else:
        try:
            with open(path_or_text) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read mesh file {path_or_text}: {exc}") from exc
    vertices, faces = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise InputError(f"line {lineno}: vertex needs 3 coordinates")
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            if len(idx) != 3:
                raise InputError(f"line {lineno}: only triangle faces are supported")
            faces.append([i - 1 if i > 0 else len(vertices) + i for i in idx])
        # other OBJ records (vn, vt, o, g, usemtl...) are ignored
    if not vertices or not faces:
        raise InputError("OBJ contains no triangles")
    return TriMesh(np.array(vertices), np.array(faces)).drop_degenerate()


def save_obj(mesh: TriMesh, path) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
