"""Progressive surface tears.

A tear advances one segment at a time from its tip.  Each extension splits
the triangles the segment crosses, turns the previous tip into a rim pair
(the slit opens there), and pins the new tip shut.  Rim pairs are pushed
apart along the surface-normal x tear-tangent direction by up to delta,
tapering linearly to zero at the tip.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidTearError
from ..geom3 import barycentric, closest_point_on_mesh, triangle_basis
from ..softbody.body import SoftBody
from .rebind import rebind_particles
from .stats import CutStats
from .surgery import PARAM_MARGIN, MeshSurgeon

PROJECT_TOL = 1e-4  # beyond this the target is projected onto the surface
SURFACE_TOL = 1e-2  # beyond this the target is rejected
MAX_HOPS = 32


@dataclass
class RimEntry:
    kind: str  # "pinch" | "pair"
    ids: tuple
    base_rest: np.ndarray
    open_dir: np.ndarray
    arc: float


@dataclass
class TearFront:
    polyline: list = field(default_factory=list)
    delta: float = 0.0
    rim: list = field(default_factory=list)
    tip_vertex: int | None = None
    tip_dir: np.ndarray | None = None

    @property
    def tip(self) -> np.ndarray:
        return self.polyline[-1]

    def arc_length(self) -> float:
        return self.rim[-1].arc if self.rim else 0.0


def begin_tear(sb: SoftBody, start_point, delta: float | None = None) -> TearFront:
    """Anchor a new tear at a surface point; topology changes start with the first segment."""
    point = np.asarray(start_point, dtype=float)
    q, _, dist = closest_point_on_mesh(point, sb.mesh.vertices, sb.mesh.triangles)
    if dist > SURFACE_TOL:
        raise InvalidTearError(f"tear start {dist * 1000:.1f} mm off the surface")
    start = point if dist <= PROJECT_TOL else q
    if delta is None:
        delta = 0.2 * sb.params.radius
    return TearFront(polyline=[start], delta=delta)


def _segment_exit(surgeon, tri_idx, start_pt, target_pt, excluded_vertex=None):
    """In-plane exit of segment start->target through one of the triangle's edges.

    Returns (edge, t_edge, point) or None when the target stays inside.
    """
    tri = surgeon.triangles[tri_idx]
    a, b, c = (surgeon.vertices[v] for v in tri)
    u, v, n = triangle_basis(a, b, c)
    origin = a

    def to2d(p):
        d = p - origin
        return np.array([d @ u, d @ v])

    target_proj = target_pt - n * float(n @ (target_pt - a))
    if barycentric(target_proj, a, b, c).min() >= -1e-12:
        return None  # target inside this triangle
    start_proj = start_pt - n * float(n @ (start_pt - a))
    p0 = to2d(start_proj)
    d = to2d(target_proj) - p0
    best = None
    corners2d = [to2d(x) for x in (a, b, c)]
    for k in range(3):
        va, vb = tri[k], tri[(k + 1) % 3]
        if excluded_vertex is not None and excluded_vertex in (va, vb):
            continue
        e0, e1 = corners2d[k], corners2d[(k + 1) % 3]
        e = e1 - e0
        # solve p0 + s*d = e0 + t*e
        denom = d[1] * e[0] - d[0] * e[1]
        if abs(denom) < 1e-18:
            continue
        rhs = e0 - p0
        s = (rhs[1] * e[0] - rhs[0] * e[1]) / denom
        t = (d[0] * rhs[1] - d[1] * rhs[0]) / denom
        if s <= 1e-9 or t < -1e-9 or t > 1 + 1e-9:
            continue
        if best is None or s < best[0]:
            edge = (va, vb) if va < vb else (vb, va)
            t_edge = t if va < vb else 1.0 - t
            best = (s, edge, t_edge)
    if best is None:
        return None
    _, edge, t_edge = best
    ea, eb = edge
    edge_len = float(np.linalg.norm(surgeon.vertices[eb] - surgeon.vertices[ea]))
    if edge_len > 2 * PARAM_MARGIN:
        margin = PARAM_MARGIN / edge_len
        t_edge = min(max(t_edge, margin), 1.0 - margin)
    point = surgeon.vertices[ea] + t_edge * (surgeon.vertices[eb] - surgeon.vertices[ea])
    return edge, t_edge, point


def _clamp_into_triangle(surgeon, tri_idx, point):
    tri = surgeon.triangles[tri_idx]
    a, b, c = (surgeon.vertices[v] for v in tri)
    _, _, n = triangle_basis(a, b, c)
    p = point - n * float(n @ (point - a))
    bc = barycentric(p, a, b, c)
    if bc.min() < 1e-9:
        bc = np.maximum(bc, 5e-4)
        bc = bc / bc.sum()
        p = bc[0] * a + bc[1] * b + bc[2] * c
    return p


def _triangle_normal(surgeon, tri_idx) -> np.ndarray:
    a, b, c = (surgeon.vertices[v] for v in surgeon.triangles[tri_idx])
    n = np.cross(b - a, c - a)
    return n / np.linalg.norm(n)


def tear_segment(
    sb: SoftBody, front: TearFront, next_point
) -> tuple[SoftBody, TearFront, CutStats]:
    """Extend the tear from its tip toward next_point."""
    stats = CutStats()
    t0 = time.perf_counter()
    target = np.asarray(next_point, dtype=float)

    surgeon = MeshSurgeon(sb.mesh.vertices, sb.rest_vertices, sb.mesh.triangles)
    tip_pt = np.asarray(front.tip, dtype=float)

    # candidate triangles around the tip for locating the target
    if front.tip_vertex is not None:
        fan = surgeon.incident_triangles(front.tip_vertex)
        ring_verts = {v for ti in fan for v in surgeon.triangles[ti]}
        candidates = [ti for ti, tri in enumerate(surgeon.triangles) if ring_verts & set(tri)]
    else:
        candidates = list(range(len(surgeon.triangles)))
        fan = []

    tri_target, q, dist = _locate_target(surgeon, candidates, target)
    if dist > SURFACE_TOL:
        raise InvalidTearError(f"tear target {dist * 1000:.1f} mm off the surface")
    if dist > PROJECT_TOL:
        target = q  # project onto the surface

    new_dir = target - tip_pt
    seg_len = float(np.linalg.norm(new_dir))
    if seg_len < 10 * PARAM_MARGIN:
        raise InvalidTearError("tear segment too short")
    new_dir = new_dir / seg_len
    avg_dir = new_dir if front.tip_dir is None else front.tip_dir + new_dir
    avg_dir = avg_dir / np.linalg.norm(avg_dir)

    # start feature and its host triangle
    if front.tip_vertex is None:
        q0, start_tri_idx, d0 = closest_point_on_mesh(
            tip_pt, sb.mesh.vertices, sb.mesh.triangles
        )
        if d0 > SURFACE_TOL:
            raise InvalidTearError("tear tip lost the surface")
        spot = _clamp_into_triangle(surgeon, start_tri_idx, tip_pt)
        s1 = surgeon.add_vertex(spot, surgeon.surface_point_rest(surgeon.triangles[start_tri_idx], spot))
        f_start = ("interior", s1)
        start_copies = {+1: s1, -1: s1}
        start_pos = spot
    else:
        v = front.tip_vertex
        start_tri_idx = None
        for ti in fan:
            a, b, c = (surgeon.vertices[x] for x in surgeon.triangles[ti])
            _, _, n = triangle_basis(a, b, c)
            p = target - n * float(n @ (target - a))
            if barycentric(p, a, b, c).min() >= -1e-9:
                start_tri_idx = ti
                break
        if start_tri_idx is None:
            for ti in fan:
                if _segment_exit(surgeon, ti, tip_pt, target, excluded_vertex=v) is not None:
                    start_tri_idx = ti
                    break
        if start_tri_idx is None:
            raise InvalidTearError("next point is not reachable from the tip fan")
        vb = surgeon.duplicate_vertex(v)
        start_copies = {+1: v, -1: vb}
        f_start = ("vertex", start_copies)
        start_pos = tip_pt

    normal = _triangle_normal(surgeon, start_tri_idx)
    side_normal = np.cross(normal, avg_dir)
    sn = np.linalg.norm(side_normal)
    if sn < 1e-12:
        raise InvalidTearError("tear direction parallel to surface normal")
    side_normal = side_normal / sn
    ref = tip_pt

    def side_of(x) -> int:
        return 1 if float((np.asarray(x) - ref) @ side_normal) >= 0 else -1

    # walk the segment across triangles, collecting chord features
    incidence = surgeon.edge_incidence()
    features = [f_start]
    feature_pts = [start_pos]
    hop_tris = []
    current_tri = start_tri_idx
    current_pt = start_pos
    excluded = front.tip_vertex
    for _hop in range(MAX_HOPS):
        hop_tris.append(current_tri)
        exit_info = _segment_exit(surgeon, current_tri, current_pt, target, excluded_vertex=excluded)
        excluded = None
        if exit_info is None:
            spot = _clamp_into_triangle(surgeon, current_tri, target)
            s2 = surgeon.add_vertex(
                spot, surgeon.surface_point_rest(surgeon.triangles[current_tri], spot)
            )
            features.append(("interior", s2))
            feature_pts.append(spot)
            break
        edge, t_edge, p_edge = exit_info
        others = [ti for ti in incidence.get(edge, []) if ti != current_tri]
        if not others:
            raise InvalidTearError("tear exits the surface boundary")
        features.append(surgeon.make_edge_feature(edge, t_edge, duplicated=True))
        feature_pts.append(p_edge)
        current_tri = others[0]
        current_pt = p_edge
    else:
        raise InvalidTearError("tear segment crosses too many triangles")

    replacements = {}
    for tri_idx, f_in, f_out in zip(hop_tris, features, features[1:]):
        replacements[tri_idx] = surgeon.split_feature_chord(tri_idx, f_in, f_out, side_of)
    if front.tip_vertex is not None:
        surgeon.reassign_fan(front.tip_vertex, start_copies[-1], side_of, set(replacements))
    surgeon._commit(replacements)
    stats.intersection_point_count = len(features) - 2  # interior edge crossings

    # front bookkeeping: old tip un-pinches, mid crossings become pairs, new tip pinches
    arc = front.arc_length()
    if front.tip_vertex is None:
        front.rim.append(
            RimEntry("pinch", (features[0][1],), surgeon.rest[features[0][1]].copy(), side_normal.copy(), arc)
        )
    else:
        old = front.rim[-1]
        front.rim[-1] = RimEntry(
            "pair", (start_copies[+1], start_copies[-1]), old.base_rest, side_normal.copy(), old.arc
        )
    prev_pt = feature_pts[0]
    for f, pt in zip(features[1:-1], feature_pts[1:-1]):
        arc += float(np.linalg.norm(pt - prev_pt))
        prev_pt = pt
        pa, pb = f[2][+1], f[2][-1]
        front.rim.append(RimEntry("pair", (pa, pb), surgeon.rest[pa].copy(), side_normal.copy(), arc))
    arc += float(np.linalg.norm(feature_pts[-1] - prev_pt))
    tip_id = features[-1][1]
    front.rim.append(RimEntry("pinch", (tip_id,), surgeon.rest[tip_id].copy(), side_normal.copy(), arc))
    front.polyline.append(surgeon.vertices[tip_id].copy())
    front.tip_vertex = tip_id
    front.tip_dir = new_dir

    # commit topology to the soft body
    n_before = len(sb.mesh.vertices)
    sb.mesh.vertices = surgeon.vertex_array()
    sb.rest_vertices = surgeon.rest_array()
    sb.mesh.triangles = surgeon.triangle_array()

    _apply_opening(sb, front)
    t1 = time.perf_counter()
    stats.perform_ms = (t1 - t0) * 1000.0

    affected = set(range(n_before, len(sb.mesh.vertices)))
    for entry in front.rim:
        affected.update(entry.ids)
    rebind_particles(sb, affected_vertices=affected, assume_connected=True)
    sb.refresh_vertices()
    stats.update_particles_ms = (time.perf_counter() - t1) * 1000.0
    return sb, front, stats


def _locate_target(surgeon, candidates, point):
    """Closest triangle among the candidates; returns (tri_idx, point, dist)."""
    from ..geom3 import closest_point_on_triangle

    best = (None, None, np.inf)
    for ti in candidates:
        a, b, c = (surgeon.vertices[v] for v in surgeon.triangles[ti])
        q = closest_point_on_triangle(point, a, b, c)
        d = float(np.linalg.norm(point - q))
        if d < best[2]:
            best = (ti, q, d)
    return best


def _apply_opening(sb: SoftBody, front: TearFront) -> None:
    """Separate rim pairs by delta, tapering linearly to zero at the tip."""
    total = front.arc_length()
    if total <= 0:
        return
    for entry in front.rim:
        if entry.kind != "pair":
            continue
        taper = max(0.0, (total - entry.arc) / total)
        offset = 0.5 * front.delta * taper * entry.open_dir
        ia, ib = entry.ids
        sb.rest_vertices[ia] = entry.base_rest + offset
        sb.rest_vertices[ib] = entry.base_rest - offset
        sb.mesh.vertices[ia] = sb.rest_vertices[ia]
        sb.mesh.vertices[ib] = sb.rest_vertices[ib]
