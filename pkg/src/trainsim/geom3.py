"""Shared closest-point / distance primitives on triangles and segments."""

from __future__ import annotations

import numpy as np


def closest_point_on_triangle(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Ericson's real-time collision detection construction, region by region."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = float(ab @ ap)
    d2 = float(ac @ ap)
    if d1 <= 0 and d2 <= 0:
        return a
    bp = p - b
    d3 = float(ab @ bp)
    d4 = float(ac @ bp)
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        v = d1 / (d1 - d3)
        return a + v * ab
    cp = p - c
    d5 = float(ab @ cp)
    d6 = float(ac @ cp)
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        w = d2 / (d2 - d6)
        return a + w * ac
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b)
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return a + ab * v + ac * w


def point_triangle_distance(p, a, b, c) -> float:
    return float(np.linalg.norm(p - closest_point_on_triangle(p, a, b, c)))


def closest_point_on_mesh(p: np.ndarray, vertices: np.ndarray, triangles: np.ndarray):
    """Closest surface point over all triangles; returns (point, triangle_index, distance).

    Vectorized coarse pass (distance per triangle), exact refinement on the
    winner; exact because the per-triangle distances are themselves exact.
    """
    p = np.asarray(p, dtype=float)
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    d = _point_triangles_distance(p, a, b, c)
    ti = int(np.argmin(d))
    q = closest_point_on_triangle(p, a[ti], b[ti], c[ti])
    return q, ti, float(d[ti])


def segment_segment_closest(p1, q1, p2, q2):
    """Closest points between segments [p1,q1] and [p2,q2]; returns (c1, c2)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    eps = 1e-15
    if a <= eps and e <= eps:
        return p1, p2
    if a <= eps:
        s = 0.0
        t = np.clip(f / e, 0.0, 1.0)
    else:
        c = float(d1 @ r)
        if e <= eps:
            t = 0.0
            s = np.clip(-c / a, 0.0, 1.0)
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > eps else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = np.clip(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t = 1.0
                s = np.clip((b - c) / a, 0.0, 1.0)
    return p1 + s * d1, p2 + t * d2


def segment_triangle_distance(p, q, a, b, c) -> float:
    """Min distance between segment [p,q] and triangle (a,b,c)."""
    # segment piercing the triangle's interior: distance zero
    n = np.cross(b - a, c - a)
    nn = float(n @ n)
    if nn > 1e-30:
        dp = float(n @ (p - a))
        dq = float(n @ (q - a))
        if dp * dq < 0.0:
            t = dp / (dp - dq)
            x = p + t * (q - p)
            # inside test via barycentric signs
            if _point_in_triangle(x, a, b, c, n):
                return 0.0
    best = np.inf
    for e0, e1 in ((a, b), (b, c), (c, a)):
        c1, c2 = segment_segment_closest(p, q, e0, e1)
        best = min(best, float(np.linalg.norm(c1 - c2)))
    for endpoint in (p, q):
        best = min(best, point_triangle_distance(endpoint, a, b, c))
    return best


def _point_in_triangle(x, a, b, c, n) -> bool:
    if float(np.cross(b - a, x - a) @ n) < 0:
        return False
    if float(np.cross(c - b, x - b) @ n) < 0:
        return False
    if float(np.cross(a - c, x - c) @ n) < 0:
        return False
    return True


def triangle_basis(a, b, c):
    """Orthonormal in-plane basis (u, v) and unit normal n of a triangle."""
    u = b - a
    u = u / np.linalg.norm(u)
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n)
    v = np.cross(n, u)
    return u, v, n


def barycentric(p, a, b, c) -> np.ndarray:
    v0 = b - a
    v1 = c - a
    v2 = p - a
    d00 = float(v0 @ v0)
    d01 = float(v0 @ v1)
    d11 = float(v1 @ v1)
    d20 = float(v2 @ v0)
    d21 = float(v2 @ v1)
    denom = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    return np.array([1.0 - v - w, v, w])


# -- batched variants (one segment or point against all triangles) -----------


def _point_triangles_distance(p, a, b, c) -> np.ndarray:
    """Ericson's region walk, vectorized over triangle arrays (T, 3)."""
    ab = b - a
    ac = c - a
    ap = p[None, :] - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p[None, :] - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p[None, :] - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_edge_ab = d1 / (d1 - d3)
        w_edge_ac = d2 / (d2 - d6)
        w_edge_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom

    closest = a + v_in[:, None] * ab + w_in[:, None] * ac  # interior default
    r6 = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    closest = np.where(r6[:, None], b + np.nan_to_num(w_edge_bc)[:, None] * (c - b), closest)
    r5 = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    closest = np.where(r5[:, None], a + np.nan_to_num(w_edge_ac)[:, None] * ac, closest)
    r4 = (d6 >= 0) & (d5 <= d6)
    closest = np.where(r4[:, None], c, closest)
    r3 = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    closest = np.where(r3[:, None], a + np.nan_to_num(v_edge_ab)[:, None] * ab, closest)
    r2 = (d3 >= 0) & (d4 <= d3)
    closest = np.where(r2[:, None], b, closest)
    r1 = (d1 <= 0) & (d2 <= 0)
    closest = np.where(r1[:, None], a, closest)
    return np.linalg.norm(p[None, :] - closest, axis=1)


def _segment_edges_distance(p1, q1, p2, q2) -> np.ndarray:
    """Min distance between one segment and many segments ((T, 3) arrays)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1[None, :] - p2
    a = float(d1 @ d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("j,ij->i", d1, r)
    b = np.einsum("j,ij->i", d1, d2)
    eps = 1e-15
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = np.where(denom > eps, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t0 = np.where(e > eps, (b * s0 + f) / e, 0.0)
        if a > eps:
            s = np.where(
                t0 < 0.0,
                np.clip(-c / a, 0.0, 1.0),
                np.where(t0 > 1.0, np.clip((b - c) / a, 0.0, 1.0), s0),
            )
        else:
            s = np.zeros_like(s0)
        t = np.clip(t0, 0.0, 1.0)
    c1 = p1[None, :] + s[:, None] * d1[None, :]
    c2 = p2 + t[:, None] * d2
    return np.linalg.norm(c1 - c2, axis=1)


def segments_mesh_distance_batch(
    p: np.ndarray, q: np.ndarray, vertices: np.ndarray, triangles: np.ndarray, chunk: int = 1024
) -> np.ndarray:
    """Min distance to the mesh for many segments at once; returns (S,)."""
    p = np.asarray(p, dtype=float).reshape(-1, 3)
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    n = np.cross(b - a, c - a)
    out = np.empty(len(p))
    for lo in range(0, len(p), chunk):
        hi = min(lo + chunk, len(p))
        out[lo:hi] = _segments_mesh_chunk(p[lo:hi], q[lo:hi], a, b, c, n)
    return out


def _segments_mesh_chunk(p, q, a, b, c, n):
    best = np.full(len(p), np.inf)
    for e0, e1 in ((a, b), (b, c), (c, a)):
        best = np.minimum(best, _segments_edges_min(p, q, e0, e1))
    best = np.minimum(best, _points_triangles_min(p, a, b, c))
    best = np.minimum(best, _points_triangles_min(q, a, b, c))
    # piercing: strict plane crossing with the hit inside the triangle
    dp = np.einsum("tj,stj->st", n, p[:, None, :] - a[None, :, :])
    dq = np.einsum("tj,stj->st", n, q[:, None, :] - a[None, :, :])
    crossing = dp * dq < 0
    if crossing.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            t = dp / (dp - dq)
        x = p[:, None, :] + t[..., None] * (q - p)[:, None, :]
        in1 = np.einsum("stj,tj->st", np.cross(b - a, x - a, axis=-1), n) >= 0
        in2 = np.einsum("stj,tj->st", np.cross(c - b, x - b, axis=-1), n) >= 0
        in3 = np.einsum("stj,tj->st", np.cross(a - c, x - c, axis=-1), n) >= 0
        pierced = (crossing & in1 & in2 & in3).any(axis=1)
        best[pierced] = 0.0
    return best


def _points_triangles_min(p, a, b, c) -> np.ndarray:
    """Min over triangles of point-triangle distance for each point; (S,)."""
    ab = b - a
    ac = c - a
    ap = p[:, None, :] - a[None, :, :]
    d1 = np.einsum("tj,stj->st", ab, ap)
    d2 = np.einsum("tj,stj->st", ac, ap)
    bp = p[:, None, :] - b[None, :, :]
    d3 = np.einsum("tj,stj->st", ab, bp)
    d4 = np.einsum("tj,stj->st", ac, bp)
    cp = p[:, None, :] - c[None, :, :]
    d5 = np.einsum("tj,stj->st", ab, cp)
    d6 = np.einsum("tj,stj->st", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.nan_to_num(d1 / (d1 - d3))
        w_ac = np.nan_to_num(d2 / (d2 - d6))
        w_bc = np.nan_to_num((d4 - d3) / ((d4 - d3) + (d5 - d6)))
        denom = va + vb + vc
        v_in = np.nan_to_num(vb / denom)
        w_in = np.nan_to_num(vc / denom)
    closest = a[None] + v_in[..., None] * ab[None] + w_in[..., None] * ac[None]
    r6 = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    closest = np.where(r6[..., None], b[None] + w_bc[..., None] * (c - b)[None], closest)
    r5 = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    closest = np.where(r5[..., None], a[None] + w_ac[..., None] * ac[None], closest)
    r4 = (d6 >= 0) & (d5 <= d6)
    closest = np.where(r4[..., None], np.broadcast_to(c[None], closest.shape), closest)
    r3 = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    closest = np.where(r3[..., None], a[None] + v_ab[..., None] * ab[None], closest)
    r2 = (d3 >= 0) & (d4 <= d3)
    closest = np.where(r2[..., None], np.broadcast_to(b[None], closest.shape), closest)
    r1 = (d1 <= 0) & (d2 <= 0)
    closest = np.where(r1[..., None], np.broadcast_to(a[None], closest.shape), closest)
    return np.linalg.norm(p[:, None, :] - closest, axis=-1).min(axis=1)


def _segments_edges_min(p1, q1, p2, q2) -> np.ndarray:
    """Min over edges of segment-segment distance for each query segment; (S,)."""
    d1 = q1 - p1  # (S, 3)
    d2 = q2 - p2  # (T, 3)
    r = p1[:, None, :] - p2[None, :, :]  # (S, T, 3)
    a = np.einsum("sj,sj->s", d1, d1)[:, None]  # (S, 1)
    e = np.einsum("tj,tj->t", d2, d2)[None, :]  # (1, T)
    f = np.einsum("tj,stj->st", d2, r)
    c = np.einsum("sj,stj->st", d1, r)
    b = np.einsum("sj,tj->st", d1, d2)
    eps = 1e-15
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = np.where(denom > eps, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t0 = np.where(e > eps, (b * s0 + f) / e, 0.0)
        s = np.where(
            t0 < 0.0,
            np.clip(np.where(a > eps, -c / a, 0.0), 0.0, 1.0),
            np.where(t0 > 1.0, np.clip(np.where(a > eps, (b - c) / a, 0.0), 0.0, 1.0), s0),
        )
        t = np.clip(t0, 0.0, 1.0)
    c1 = p1[:, None, :] + s[..., None] * d1[:, None, :]
    c2 = p2[None, :, :] + t[..., None] * d2[None, :, :]
    return np.linalg.norm(c1 - c2, axis=-1).min(axis=1)


def segment_mesh_distance(p, q, vertices: np.ndarray, triangles: np.ndarray) -> float:
    """Min distance from segment [p, q] to a triangle mesh, batched over triangles."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    best = np.inf
    # piercing: strict plane crossing with the hit point inside the triangle
    n = np.cross(b - a, c - a)
    dp = np.einsum("ij,ij->i", n, p[None, :] - a)
    dq = np.einsum("ij,ij->i", n, q[None, :] - a)
    crossing = dp * dq < 0
    if crossing.any():
        t = dp[crossing] / (dp[crossing] - dq[crossing])
        x = p[None, :] + t[:, None] * (q - p)[None, :]
        aa, bb, cc, nn = a[crossing], b[crossing], c[crossing], n[crossing]
        in1 = np.einsum("ij,ij->i", np.cross(bb - aa, x - aa), nn) >= 0
        in2 = np.einsum("ij,ij->i", np.cross(cc - bb, x - bb), nn) >= 0
        in3 = np.einsum("ij,ij->i", np.cross(aa - cc, x - cc), nn) >= 0
        if (in1 & in2 & in3).any():
            return 0.0
    for e0, e1 in ((a, b), (b, c), (c, a)):
        best = min(best, float(_segment_edges_distance(p, q, e0, e1).min()))
    best = min(best, float(_point_triangles_distance(p, a, b, c).min()))
    best = min(best, float(_point_triangles_distance(q, a, b, c).min()))
    return best
