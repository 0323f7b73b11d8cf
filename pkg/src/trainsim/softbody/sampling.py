"""Poisson-disk sampling on a triangle mesh surface.

Dart throwing with area-weighted triangle selection: candidate points are
uniform on the surface, accepted only when at least r away from every
accepted sample.  A uniform hash grid keeps rejection tests O(1); sampling
stops after 300 consecutive rejections.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from .mesh import TriMesh

MAX_CONSECUTIVE_REJECTIONS = 300


def _surface_points(mesh: TriMesh, count: int, rng: np.random.Generator) -> np.ndarray:
    areas = mesh.triangle_areas()
    prob = areas / areas.sum()
    tri_idx = rng.choice(len(prob), size=count, p=prob)
    u = rng.random(count)
    v = rng.random(count)
    su = np.sqrt(u)
    a = mesh.vertices[mesh.triangles[tri_idx, 0]]
    b = mesh.vertices[mesh.triangles[tri_idx, 1]]
    c = mesh.vertices[mesh.triangles[tri_idx, 2]]
    return (1 - su)[:, None] * a + (su * (1 - v))[:, None] * b + (su * v)[:, None] * c


class _HashGrid:
    def __init__(self, cell: float):
        self.cell = cell
        self.cells: dict[tuple[int, int, int], list[int]] = {}
        self.points: list[np.ndarray] = []

    def _key(self, p) -> tuple[int, int, int]:
        return tuple(np.floor(p / self.cell).astype(int))

    def too_close(self, p: np.ndarray, r: float) -> bool:
        kx, ky, kz = self._key(p)
        r2 = r * r
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for idx in self.cells.get((kx + dx, ky + dy, kz + dz), ()):
                        d = self.points[idx] - p
                        if float(d @ d) < r2:
                            return True
        return False

    def add(self, p: np.ndarray) -> None:
        self.cells.setdefault(self._key(p), []).append(len(self.points))
        self.points.append(p)


def poisson_sample(mesh: TriMesh, r: float, seed: int = 0) -> np.ndarray:
    """Sample anchors with pairwise distance >= r; deterministic under seed."""
    if r <= 0:
        raise InvalidInputError("sample radius must be positive")
    if not len(mesh.triangles):
        raise InvalidInputError("mesh has no triangles")
    rng = np.random.default_rng(seed)
    grid = _HashGrid(cell=r)
    rejections = 0
    batch = 256
    while rejections < MAX_CONSECUTIVE_REJECTIONS:
        for p in _surface_points(mesh, batch, rng):
            if grid.too_close(p, r):
                rejections += 1
                if rejections >= MAX_CONSECUTIVE_REJECTIONS:
                    break
            else:
                grid.add(p)
                rejections = 0
    if not grid.points:  # r beyond mesh diameter: single sample still stands
        grid.add(_surface_points(mesh, 1, rng)[0])
    return np.array(grid.points)


def sample_to_count(
    mesh: TriMesh, target: int, seed: int = 0, tolerance: float = 0.2, max_iter: int = 40
) -> tuple[np.ndarray, float]:
    """Bisect the radius until the sample count lands within tolerance of target.

    Returns (anchors, radius).
    """
    if target < 1:
        raise InvalidInputError("target count must be >= 1")
    # initial bracket from the uniform-packing estimate r ~ sqrt(area / n)
    area = mesh.total_area()
    r_mid = float(np.sqrt(area / max(target, 1)))
    lo, hi = r_mid / 8.0, r_mid * 8.0
    best = None
    for _ in range(max_iter):
        r = 0.5 * (lo + hi)
        anchors = poisson_sample(mesh, r, seed)
        n = len(anchors)
        if best is None or abs(n - target) < abs(best[2] - target):
            best = (anchors, r, n)
        if abs(n - target) <= tolerance * target:
            return anchors, r
        if n > target:
            lo = r  # too many: grow radius
        else:
            hi = r
    anchors, r, _ = best
    return anchors, r
