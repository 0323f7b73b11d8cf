import math

import numpy as np
import pytest

from trainsim.errors import InputError, InvalidInputError, RangeError
from trainsim.softbody import (
    SoftBodyParams,
    TriMesh,
    build_softbody,
    displace_particle,
    load_obj,
    poisson_sample,
    sample_to_count,
    shapes,
    step,
)


def single_triangle():
    return TriMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float), np.array([[0, 1, 2]]))


class TestMesh:
    def test_obj_round_trip(self, tmp_path):
        mesh = shapes.cube()
        from trainsim.softbody import save_obj

        path = tmp_path / "cube.obj"
        save_obj(mesh, path)
        back = load_obj(str(path))
        assert np.allclose(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_obj_text_parse(self):
        text = "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
        mesh = load_obj(text)
        assert len(mesh.vertices) == 3 and len(mesh.triangles) == 1

    def test_obj_rejects_quads(self):
        text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        with pytest.raises(InputError):
            load_obj(text)

    def test_degenerate_triangles_dropped(self):
        text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\n"
        mesh = load_obj(text)
        assert len(mesh.triangles) == 1

    def test_index_out_of_range(self):
        with pytest.raises(InputError):
            TriMesh(np.zeros((2, 3)), np.array([[0, 1, 2]]))

    def test_manifold_check(self):
        assert shapes.cube().is_manifold()
        assert shapes.liver_mesh().is_manifold()
        assert shapes.flat_grid().is_manifold()

    def test_liver_mesh_density_class(self):
        mesh = shapes.liver_mesh()
        assert len(mesh.triangles) == 768
        assert 300 <= len(mesh.vertices) <= 600


class TestPoissonSampling:
    def test_single_triangle_large_radius(self):
        anchors = poisson_sample(single_triangle(), r=10.0, seed=1)
        assert len(anchors) == 1

    def test_min_distance_respected(self):
        mesh = shapes.liver_mesh()
        anchors = poisson_sample(mesh, r=0.02, seed=3)
        d = np.linalg.norm(anchors[:, None] - anchors[None, :], axis=2)
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 0.02

    def test_min_distance_fuzz_seeds(self):
        mesh = shapes.uv_sphere(segments=12, rows=6)
        for seed in range(25):
            anchors = poisson_sample(mesh, r=0.35, seed=seed)
            if len(anchors) > 1:
                d = np.linalg.norm(anchors[:, None] - anchors[None, :], axis=2)
                np.fill_diagonal(d, np.inf)
                assert d.min() >= 0.35

    def test_deterministic_under_seed(self):
        mesh = shapes.liver_mesh()
        a = poisson_sample(mesh, r=0.025, seed=9)
        b = poisson_sample(mesh, r=0.025, seed=9)
        assert np.array_equal(a, b)
        c = poisson_sample(mesh, r=0.025, seed=10)
        assert len(a) != len(c) or not np.allclose(a, c)

    def test_anchors_on_surface(self):
        mesh = single_triangle()
        anchors = poisson_sample(mesh, r=0.05, seed=2)
        # all anchors in the z=0 plane inside the triangle
        assert np.allclose(anchors[:, 2], 0.0)
        assert np.all(anchors[:, 0] >= -1e-12) and np.all(anchors[:, 1] >= -1e-12)
        assert np.all(anchors[:, 0] + anchors[:, 1] <= 1 + 1e-12)

    def test_liver_scale_particle_count(self):
        mesh = shapes.liver_mesh()
        anchors, r = sample_to_count(mesh, target=191, seed=5)
        assert abs(len(anchors) - 191) <= 0.2 * 191

    def test_bad_radius(self):
        with pytest.raises(InvalidInputError):
            poisson_sample(single_triangle(), r=0.0)


def small_body(radius=0.1, beta=0.5, k=10.0, anchors=None):
    mesh = shapes.flat_grid(nx=6, ny=6, size=1.0)
    if anchors is None:
        anchors = poisson_sample(mesh, r=radius, seed=7)
    params = SoftBodyParams(radius=radius, propagation=beta, stiffness=k)
    return build_softbody(mesh, np.asarray(anchors, dtype=float), params)


class TestBuildSoftbody:
    def test_connectivity_threshold(self):
        mesh = shapes.flat_grid()
        r = 0.1
        anchors = np.array([[0, 0, 0], [3 * r, 0, 0]])  # distance 3r > 2.5r
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=r))
        assert sb.neighbors[0] == set() and sb.neighbors[1] == set()
        anchors = np.array([[0, 0, 0], [2 * r, 0, 0]])  # 2r < 2.5r
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=r))
        assert sb.neighbors[0] == {1} and sb.neighbors[1] == {0}

    def test_neighbor_symmetry(self):
        sb = small_body()
        for i, ns in enumerate(sb.neighbors):
            for j in ns:
                assert i in sb.neighbors[j]

    def test_coincident_vertex_weight_one(self):
        mesh = TriMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float), np.array([[0, 1, 2]]))
        anchors = np.array([[0.0, 0.0, 0.0], [0.9, 0.05, 0.0]])
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=0.5))
        w = sb.bind_weights[0]
        idx = sb.bind_indices[0]
        assert w[list(idx).index(0)] > 0.999  # clamp path dominates

    def test_equidistant_weights_half(self):
        mesh = TriMesh(
            np.array([[0.5, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float), np.array([[0, 1, 2]])
        )
        anchors = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=0.6))
        w = sb.bind_weights[0]
        assert len(w) == 2 and np.allclose(w, [0.5, 0.5])

    def test_partition_of_unity(self):
        sb = small_body()
        for idx, w in zip(sb.bind_indices, sb.bind_weights):
            if len(idx):
                assert abs(w.sum() - 1.0) <= 1e-6

    def test_unbound_vertices_flagged(self):
        mesh = shapes.flat_grid(nx=10, ny=10, size=2.0)
        anchors = np.array([[0.0, 0.0, 0.0]])
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=0.05))
        unbound = sb.unbound_vertices()
        assert len(unbound) > 0
        corners = np.abs(mesh.vertices[unbound]).max(axis=1)
        assert np.all(corners > 0.1)  # far vertices unbound, they follow rigidly


class TestDisplace:
    def test_zero_delta_noop(self):
        sb = small_body()
        before = sb.mesh.vertices.copy()
        displace_particle(sb, 0, [0, 0, 0])
        assert np.allclose(sb.mesh.vertices, before)

    def test_isolated_particle_carries_vertex_exactly(self):
        mesh = single_triangle()
        anchors = np.array([[0.0, 0.0, 0.0]])
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=0.05, bind_radius=0.01))
        # vertex 0 coincides with the only particle: weight 1
        delta = np.array([0.01, 0.02, 0.0])
        displace_particle(sb, 0, delta)
        assert np.allclose(sb.mesh.vertices[0], sb.rest_vertices[0] + delta, atol=1e-12)

    def test_neighbor_quarter_displacement(self):
        # reference implementation of the propagation rule as oracle
        r, beta = 0.1, 0.5
        anchors = np.array([[0.0, 0.0, 0.0], [2 * r, 0.0, 0.0]])
        sb = small_body(radius=r, beta=beta, anchors=anchors)
        assert sb.neighbors[0] == {1}
        delta = np.array([0.01, 0.0, 0.0])

        def oracle(anchor_i, anchor_j, delta):
            d = max(np.linalg.norm(anchor_i - anchor_j), 1e-6)
            return beta * min(1.0, r / d) * delta

        expected = anchors[1] + oracle(anchors[0], anchors[1], delta)
        displace_particle(sb, 0, delta)
        assert np.allclose(sb.positions[1], expected)
        assert np.allclose(sb.positions[1] - anchors[1], 0.25 * delta)

    def test_no_propagation_beyond_one_ring(self):
        r = 0.1
        anchors = np.array([[0.0, 0.0, 0.0], [2 * r, 0.0, 0.0], [4 * r, 0.0, 0.0]])
        sb = small_body(radius=r, anchors=anchors)
        assert sb.neighbors[0] == {1} and sb.neighbors[1] == {0, 2}
        displace_particle(sb, 0, [0.01, 0, 0])
        assert np.allclose(sb.positions[2], anchors[2])  # two rings away: untouched

    def test_invalid_index(self):
        sb = small_body()
        with pytest.raises(RangeError):
            displace_particle(sb, 10_000, [0, 0, 0])

    def test_monotone_influence(self):
        # a vertex closer to the displaced particle moves at least as much
        mesh = shapes.flat_grid(nx=8, ny=8, size=1.0)
        anchors = np.array([[0.0, 0.0, 0.0]])
        sb = build_softbody(mesh, anchors, SoftBodyParams(radius=0.3, bind_radius=0.6))
        displace_particle(sb, 0, [0.0, 0.0, 0.05])
        moved = np.linalg.norm(sb.mesh.vertices - sb.rest_vertices, axis=1)
        dist = np.linalg.norm(sb.rest_vertices - anchors[0], axis=1)
        bound = [i for i, idx in enumerate(sb.bind_indices) if len(idx)]
        for i in bound:
            for j in bound:
                if dist[i] < dist[j] - 1e-9:
                    assert moved[i] >= moved[j] - 1e-12


class TestStep:
    def test_fixed_point_at_anchors(self):
        sb = small_body()
        before = sb.positions.copy()
        step(sb, 1.0 / 90.0)
        assert np.allclose(sb.positions, before)

    def test_geometric_decay_closed_form(self):
        k, dt = 10.0, 1.0 / 90.0
        anchors = np.array([[0.0, 0.0, 0.0]])
        sb = small_body(k=k, anchors=anchors)
        x0 = np.array([0.02, 0.0, 0.01])
        sb.positions[0] = sb.anchors[0] + x0
        factor = 1.0 - k * dt
        for n in range(1, 200):
            step(sb, dt)
            expected = x0 * factor**n
            got = sb.positions[0] - sb.anchors[0]
            assert np.max(np.abs(got - expected)) < 1e-6

    def test_decay_below_one_percent_in_predicted_steps(self):
        k, dt = 10.0, 1.0 / 90.0
        n_pred = math.ceil(math.log(0.01) / math.log(1 - k * dt))
        anchors = np.array([[0.0, 0.0, 0.0]])
        sb = small_body(k=k, anchors=anchors)
        x0 = np.array([0.05, 0.0, 0.0])
        sb.positions[0] = sb.anchors[0] + x0
        for _ in range(n_pred):
            step(sb, dt)
        assert np.linalg.norm(sb.positions[0] - sb.anchors[0]) <= 0.01 * np.linalg.norm(x0) + 1e-15

    def test_energy_non_increasing(self):
        rng = np.random.default_rng(71)
        sb = small_body()
        sb.positions = sb.anchors + rng.uniform(-0.02, 0.02, size=sb.positions.shape)
        prev = float(np.sum((sb.positions - sb.anchors) ** 2))
        for _ in range(50):
            step(sb, 1.0 / 90.0)
            cur = float(np.sum((sb.positions - sb.anchors) ** 2))
            assert cur <= prev + 1e-15
            prev = cur

    def test_rest_return(self):
        k, dt = 10.0, 1.0 / 90.0
        sb = small_body(k=k)
        rng = np.random.default_rng(73)
        offsets = rng.uniform(-0.03, 0.03, size=sb.positions.shape)
        sb.positions = sb.anchors + offsets
        initial = float(np.max(np.linalg.norm(offsets, axis=1)))
        for _ in range(int(10.0 / (k * dt))):
            step(sb, dt)
        final = float(np.max(np.linalg.norm(sb.positions - sb.anchors, axis=1)))
        assert final < 1e-3 * initial

    def test_dt_bounds(self):
        sb = small_body()
        with pytest.raises(InvalidInputError):
            step(sb, 0.1)
        with pytest.raises(InvalidInputError):
            step(sb, 0.0)

    def test_second_order_mode_damps(self):
        r = 0.1
        anchors = np.array([[0.0, 0.0, 0.0]])
        mesh = shapes.flat_grid(nx=2, ny=2)
        sb = build_softbody(
            mesh, anchors, SoftBodyParams(radius=r, stiffness=40.0, damping=8.0, second_order=True)
        )
        sb.positions[0] = sb.anchors[0] + np.array([0.02, 0, 0])
        for _ in range(2000):
            step(sb, 1.0 / 90.0)
        assert np.linalg.norm(sb.positions[0] - sb.anchors[0]) < 1e-4
