"""Mesh surgery: the shared topology-editing core under cuts and tears.

Two editing modes operate on the same vertex/triangle buffers:

* quad cuts — every mesh edge strictly crossing a planar blade quad gets an
  intersection vertex; crossed triangles are re-triangulated along the chord
  between their two intersection points; triangles with only one honored
  intersection (the blade ended inside the quad bounds) are merely refined so
  no T-junctions appear.  An intersection vertex is duplicated into a rim
  pair only when every triangle around its edge carries the cut, which pins
  the slit shut at its tips automatically.

* feature chords — a slit segment across one triangle between two features
  (existing vertex, point on an edge, interior point), used by progressive
  tears.  Features carry their own per-side vertex copies; a pinch is simply
  the same id on both sides.

Degenerate plane contact is removed up front by nudging near-zero signed
distances to a deterministic epsilon, so every crossing is strict; computed
intersection parameters are clamped away from edge endpoints, which keeps
new vertices at least ~1e-6 m from existing ones in place of vertex snapping.
"""

from __future__ import annotations

import numpy as np

from ..geom3 import barycentric

PLANE_EPS = 1e-9
PARAM_MARGIN = 1e-6  # meters kept between a new vertex and the edge endpoints
QUAD_BARY_EPS = 1e-7

# feature tuples:
#   ("vertex", copies)            existing vertex, possibly un-pinched
#   ("edge", (a, b), copies)      new vertex on edge (a, b), a < b
#   ("interior", vid)             new interior vertex (always a pinch)
# copies = {+1: vertex_id, -1: vertex_id}; equal ids mean a pinch.


class MeshSurgeon:
    """Owns growable vertex/triangle buffers during one surgical operation."""

    def __init__(self, vertices: np.ndarray, rest_vertices: np.ndarray, triangles: np.ndarray):
        self.vertices: list[np.ndarray] = [v.astype(float) for v in vertices]
        self.rest: list[np.ndarray] = [v.astype(float) for v in rest_vertices]
        self.triangles: list[tuple[int, int, int]] = [tuple(int(i) for i in t) for t in triangles]

    # -- buffers ----------------------------------------------------------

    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices)

    def rest_array(self) -> np.ndarray:
        return np.array(self.rest)

    def triangle_array(self) -> np.ndarray:
        return np.array(self.triangles, dtype=np.int64).reshape(-1, 3)

    def add_vertex(self, position, rest) -> int:
        self.vertices.append(np.asarray(position, dtype=float).copy())
        self.rest.append(np.asarray(rest, dtype=float).copy())
        return len(self.vertices) - 1

    def duplicate_vertex(self, index: int) -> int:
        return self.add_vertex(self.vertices[index], self.rest[index])

    def surface_point_rest(self, tri, point) -> np.ndarray:
        a, b, c = tri
        bc = barycentric(point, self.vertices[a], self.vertices[b], self.vertices[c])
        return bc[0] * self.rest[a] + bc[1] * self.rest[b] + bc[2] * self.rest[c]

    def incident_triangles(self, vertex: int) -> list[int]:
        return [ti for ti, tri in enumerate(self.triangles) if vertex in tri]

    def edge_incidence(self) -> dict[tuple[int, int], list[int]]:
        incidence: dict[tuple[int, int], list[int]] = {}
        for ti, (a, b, c) in enumerate(self.triangles):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                incidence.setdefault(key, []).append(ti)
        return incidence

    # -- quad cuts ---------------------------------------------------------

    def cut_with_quad(self, corners: np.ndarray) -> int:
        """One planar blade quad; returns the number of intersection points."""
        corners = np.asarray(corners, dtype=float).reshape(4, 3)
        origin = corners.mean(axis=0)
        normal = np.cross(corners[2] - corners[0], corners[3] - corners[1])
        nn = np.linalg.norm(normal)
        if nn < 1e-18:
            return 0
        normal = normal / nn

        verts = self.vertex_array()
        d = (verts - origin) @ normal
        d[np.abs(d) < PLANE_EPS] = PLANE_EPS  # simulation-of-simplicity nudge

        incidence = self.edge_incidence()
        crossings: dict[tuple[int, int], tuple[float, np.ndarray]] = {}
        for (a, b) in incidence:
            if d[a] * d[b] >= 0:
                continue
            t = d[a] / (d[a] - d[b])
            edge_len = float(np.linalg.norm(verts[b] - verts[a]))
            if edge_len > 2 * PARAM_MARGIN:
                margin = PARAM_MARGIN / edge_len
                t = min(max(t, margin), 1.0 - margin)
            point = verts[a] + t * (verts[b] - verts[a])
            if _inside_quad(point, corners, normal):
                crossings[(a, b)] = (t, point)
        if not crossings:
            return 0

        cut_edges_per_tri: dict[int, list[tuple[int, int]]] = {}
        for edge in crossings:
            for ti in incidence[edge]:
                cut_edges_per_tri.setdefault(ti, []).append(edge)
        chord_cut = {ti for ti, edges in cut_edges_per_tri.items() if len(edges) == 2}

        # duplicate only where every surrounding triangle carries the cut
        copies: dict[tuple[int, int], dict[int, int]] = {}
        for edge, (t, point) in crossings.items():
            a, b = edge
            rest_point = self.rest[a] + t * (self.rest[b] - self.rest[a])
            primary = self.add_vertex(point, rest_point)
            if all(ti in chord_cut for ti in incidence[edge]):
                secondary = self.add_vertex(point, rest_point)
            else:
                secondary = primary
            copies[edge] = {+1: primary, -1: secondary}

        replaced: dict[int, list[tuple[int, int, int]]] = {}
        for ti, edges in cut_edges_per_tri.items():
            tri = self.triangles[ti]
            if ti in chord_cut:
                replaced[ti] = self._split_chord_cut(tri, edges, copies, d)
            else:
                replaced[ti] = self._split_edge_only(tri, edges[0], copies)
        self._commit(replaced)
        return len(crossings)

    def _split_chord_cut(self, tri, edges, copies, d):
        shared = set(edges[0]) & set(edges[1])
        sv = next(iter(shared))
        # rotate winding so the triangle reads (sv, m, n)
        i = tri.index(sv)
        sv, m, n = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
        e_sm = (sv, m) if sv < m else (m, sv)
        e_ns = (n, sv) if n < sv else (sv, n)
        sign_sv = 1 if d[sv] > 0 else -1
        p1_near = copies[e_sm][sign_sv]
        p1_far = copies[e_sm][-sign_sv]
        p2_near = copies[e_ns][sign_sv]
        p2_far = copies[e_ns][-sign_sv]
        return [
            (sv, p1_near, p2_near),
            (m, n, p2_far),
            (m, p2_far, p1_far),
        ]

    def _split_edge_only(self, tri, edge, copies):
        p = copies[edge][+1]  # single vertex by construction
        for k in range(3):
            v0, v1, v2 = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            if {v0, v1} == set(edge):
                return [(v0, p, v2), (p, v1, v2)]
        raise AssertionError("split edge not part of triangle")

    def _commit(self, replaced: dict[int, list[tuple[int, int, int]]]) -> None:
        new_tris: list[tuple[int, int, int]] = []
        for ti, tri in enumerate(self.triangles):
            if ti in replaced:
                new_tris.extend(replaced[ti])
            else:
                new_tris.append(tri)
        self.triangles = new_tris

    # -- feature chords (tears) ---------------------------------------------

    def split_feature_chord(self, tri_idx: int, f_in: tuple, f_out: tuple, side_of):
        """Replacement triangles for a slit across one triangle between two features."""
        tri = self.triangles[tri_idx]
        kin, kout = f_in[0], f_out[0]
        if kin == "interior" and kout == "interior":
            return self._chord_interior_interior(tri, f_in[1], f_out[1])
        if kin == "vertex" and kout == "interior":
            return self._chord_vertex_interior(tri, f_in[1], f_out[1], side_of)
        if kin == "vertex" and kout == "edge":
            return self._chord_vertex_edge(tri, f_in[1], f_out, side_of)
        if kin == "edge" and kout == "interior":
            return self._chord_interior_edge(tri, f_out[1], f_in, side_of)
        if kin == "interior" and kout == "edge":
            return self._chord_interior_edge(tri, f_in[1], f_out, side_of)
        if kin == "edge" and kout == "edge":
            return self._chord_edge_edge(tri, f_in, f_out, side_of)
        raise AssertionError(f"unsupported chord {kin} -> {kout}")

    def _chord_edge_edge(self, tri, f_in, f_out, side_of):
        shared = set(f_in[1]) & set(f_out[1])
        if len(shared) != 1:
            raise AssertionError("edge-edge chord needs edges sharing one vertex")
        sv = next(iter(shared))
        i = tri.index(sv)
        sv, m, n = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
        e_sm = (sv, m) if sv < m else (m, sv)
        by_edge = {f_in[1]: f_in[2], f_out[1]: f_out[2]}
        c_sm = by_edge[e_sm]
        e_ns = (n, sv) if n < sv else (sv, n)
        c_ns = by_edge[e_ns]
        s_near = side_of(self.vertices[sv])
        p1_near, p1_far = c_sm[s_near], c_sm[-s_near]
        p2_near, p2_far = c_ns[s_near], c_ns[-s_near]
        return [(sv, p1_near, p2_near), (m, n, p2_far), (m, p2_far, p1_far)]

    def _fan_containing(self, fan, point):
        best, best_min = None, -np.inf
        for ft in fan:
            bc = barycentric(point, *(self.vertices[v] for v in ft))
            if bc.min() > best_min:
                best, best_min = ft, bc.min()
        return best

    def _chord_interior_interior(self, tri, s1, s2):
        fan = [(s1, tri[0], tri[1]), (s1, tri[1], tri[2]), (s1, tri[2], tri[0])]
        host = self._fan_containing(fan, self.vertices[s2])
        out = [ft for ft in fan if ft != host]
        fa, fb, fc = host  # fa == s1 by construction
        out.extend([(fa, fb, s2), (s2, fb, fc), (fa, s2, fc)])
        return out

    def _chord_vertex_interior(self, tri, copies, s, side_of):
        i = next(k for k in range(3) if tri[k] in (copies[+1], copies[-1]))
        _, m, n = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
        va = copies[side_of(self.vertices[m])]
        vb = copies[side_of(self.vertices[n])]
        return [(va, m, s), (m, n, s), (vb, s, n)]

    def _chord_vertex_edge(self, tri, v_copies, edge_f, side_of):
        _, edge, p_copies = edge_f
        i = next(k for k in range(3) if tri[k] in (v_copies[+1], v_copies[-1]))
        _, m, n = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
        if {m, n} != set(edge):
            raise AssertionError("edge feature must lie opposite the vertex feature")
        pm = p_copies[side_of(self.vertices[m])]
        pn = p_copies[side_of(self.vertices[n])]
        va = v_copies[side_of(self.vertices[m])]
        vb = v_copies[side_of(self.vertices[n])]
        return [(va, m, pm), (vb, pn, n)]

    def _chord_interior_edge(self, tri, s, edge_f, side_of):
        _, edge, p_copies = edge_f
        for k in range(3):
            l, m, n = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            if {m, n} == set(edge):
                break
        else:
            raise AssertionError("edge feature not on triangle")
        pm = p_copies[side_of(self.vertices[m])]
        pn = p_copies[side_of(self.vertices[n])]
        return [(s, l, m), (s, m, pm), (s, pn, n), (s, n, l)]

    def make_edge_feature(self, edge: tuple[int, int], t: float, duplicated: bool) -> tuple:
        """Create the vertex (or rim pair) for a crossing of an existing edge."""
        a, b = edge
        pos = self.vertices[a] + t * (self.vertices[b] - self.vertices[a])
        rest = self.rest[a] + t * (self.rest[b] - self.rest[a])
        primary = self.add_vertex(pos, rest)
        secondary = self.add_vertex(pos, rest) if duplicated else primary
        return ("edge", edge, {+1: primary, -1: secondary})

    def reassign_fan(self, vertex: int, vb: int, side_of, skip: set[int]) -> None:
        """Point side-B fan triangles of an un-pinched vertex at its new copy."""
        for ti in self.incident_triangles(vertex):
            if ti in skip:
                continue
            tri = self.triangles[ti]
            centroid = (
                self.vertices[tri[0]] + self.vertices[tri[1]] + self.vertices[tri[2]]
            ) / 3.0
            if side_of(centroid) < 0:
                self.triangles[ti] = tuple(vb if v == vertex else v for v in tri)


def _inside_quad(point: np.ndarray, corners: np.ndarray, normal: np.ndarray) -> bool:
    c0, c1, c2, c3 = corners
    for tri in ((c0, c1, c2), (c0, c2, c3)):
        bc = barycentric(point, *tri)
        if bc.min() >= -QUAD_BARY_EPS:
            return True
    return False


def connected_components(n_vertices: int, triangles) -> np.ndarray:
    """Union-find labeling of vertices by triangle connectivity."""
    parent = np.arange(n_vertices)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, c in triangles:
        ra = find(int(a))
        parent[find(int(b))] = ra
        parent[find(int(c))] = ra
    roots = np.array([find(i) for i in range(n_vertices)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels
