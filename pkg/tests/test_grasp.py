import numpy as np
import pytest

from trainsim.errors import SchemaError
from trainsim.geom3 import segment_mesh_distance, segment_triangle_distance
from trainsim.grasp import (
    Bone,
    GraspMovement,
    HandSkeleton,
    capsule_mesh_contact,
    load_hand_file,
    solve_grasp,
)
from trainsim.grasp.solver import BISECTION_ITERS, STEP
from trainsim.motor import Pose, quat_from_axis_angle, quat_slerp
from trainsim.softbody import shapes
from trainsim.softbody.mesh import TriMesh


def finger_chain(phalanges=2, length=0.04, radius=0.008):
    """A single finger: root knuckle at origin, bones along +x, curling about +z."""
    bones = [
        Bone("root", -1, [0, 0, 0], [1, 0, 0, 0], radius, length),
    ]
    for i in range(1, phalanges):
        bones.append(Bone(f"ph{i}", i - 1, [length, 0, 0], [1, 0, 0, 0], radius, length))
    return HandSkeleton(bones)


def curl_movement(skeleton, total_angle=np.pi / 2):
    # curl about -z: the finger (along +x) closes toward -y
    n = len(skeleton)
    initial = np.tile([1.0, 0, 0, 0], (n, 1))
    final = np.array([quat_from_axis_angle([0, 0, -1], total_angle / n) for _ in range(n)])
    return GraspMovement(initial, final)


def dense_first_contacts(skel, move, obj, root, ds=1e-4, offset=0.002):
    """Independent dense-sampling freeze oracle.

    Scans s on a uniform grid; a joint freezes at the first sample where its
    own capsule touches (within the offset) or a frozen descendant is pushed
    beyond the surface itself.  After each freeze the scan restarts from the
    event sample so cascades resolve at the same parameter.
    """
    from trainsim.geom3 import segments_mesh_distance_batch

    n = len(skel)
    frozen = np.zeros(n, dtype=bool)
    frozen_s = np.ones(n)
    s_grid = np.arange(0.0, 1.0 + ds / 2, ds)
    descendants = [skel.descendants(j) for j in range(n)]
    start = 0
    for _event in range(2 * n + 1):
        if frozen.all() or start >= len(s_grid):
            break
        tail = s_grid[start:]
        ends = {j: (np.empty((len(tail), 3)), np.empty((len(tail), 3))) for j in range(n)}
        for k, s in enumerate(tail):
            rot = np.empty((n, 4))
            for j in range(n):
                sj = frozen_s[j] if frozen[j] else s
                rot[j] = quat_slerp(move.initial[j], move.final[j], sj)
            fk = skel.forward_kinematics(rot, root)
            for j in range(n):
                p0, p1, _ = skel.bone_capsule(j, *fk[j])
                ends[j][0][k] = p0
                ends[j][1][k] = p1
        dist = {
            j: segments_mesh_distance_batch(ends[j][0], ends[j][1], obj.vertices, obj.triangles)
            for j in range(n)
        }
        event = None
        for j in range(n):
            if frozen[j]:
                continue
            blocked = dist[j] < skel.bones[j].capsule_radius + offset
            for k in descendants[j]:
                if frozen[k]:
                    blocked |= dist[k] < skel.bones[k].capsule_radius
            hits = np.flatnonzero(blocked)
            if len(hits) and (event is None or hits[0] < event[0] or (hits[0] == event[0] and j < event[1])):
                event = (int(hits[0]), j)
        if event is None:
            break
        idx, j = event
        frozen[j] = True
        frozen_s[j] = float(tail[idx])
        start += idx
    return frozen, frozen_s


class TestGeometryOracles:
    def test_segment_triangle_distance_cases(self):
        a, b, c = np.array([0, 0, 0.0]), np.array([1, 0, 0.0]), np.array([0, 1, 0.0])
        # parallel segment above the triangle
        assert segment_triangle_distance(
            np.array([0.2, 0.2, 0.5]), np.array([0.4, 0.2, 0.5]), a, b, c
        ) == pytest.approx(0.5)
        # piercing
        assert segment_triangle_distance(
            np.array([0.2, 0.2, -0.5]), np.array([0.2, 0.2, 0.5]), a, b, c
        ) == 0.0
        # closest to an edge
        assert segment_triangle_distance(
            np.array([-1.0, -1.0, 0.0]), np.array([1.0, -1.0, 0.0]), a, b, c
        ) == pytest.approx(1.0)

    def test_batched_matches_scalar(self):
        rng = np.random.default_rng(91)
        mesh = shapes.uv_sphere(segments=8, rows=4, radii=(0.05, 0.05, 0.05))
        for _ in range(100):
            p = rng.uniform(-0.12, 0.12, size=3)
            q = p + rng.uniform(-0.08, 0.08, size=3)
            batched = segment_mesh_distance(p, q, mesh.vertices, mesh.triangles)
            scalar = min(
                segment_triangle_distance(
                    p, q, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]
                )
                for t in mesh.triangles
            )
            assert batched == pytest.approx(scalar, abs=1e-12)

    def test_contact_threshold_exact(self):
        # distance exactly radius+offset-eps touches; +eps does not
        tri = TriMesh(
            np.array([[0, -1, -1.0], [0, 1, -1.0], [0, 0, 1.0]]), np.array([[0, 1, 2]])
        )
        radius, offset = 0.01, 0.002
        eps = 1e-6
        gap = radius + offset
        p0 = np.array([gap - eps, 0, 0.0])
        p1 = np.array([gap - eps, 0.5, 0.0])
        assert capsule_mesh_contact(p0, p1, radius, tri, offset)[0]
        p0 = np.array([gap + eps, 0, 0.0])
        p1 = np.array([gap + eps, 0.5, 0.0])
        assert not capsule_mesh_contact(p0, p1, radius, tri, offset)[0]

    def test_capsule_far_and_piercing(self):
        tri = TriMesh(np.array([[0, -1, -1.0], [0, 1, -1.0], [0, 0, 1.0]]), np.array([[0, 1, 2]]))
        assert not capsule_mesh_contact(np.array([5.0, 0, 0]), np.array([6.0, 0, 0]), 0.01, tri)[0]
        assert capsule_mesh_contact(np.array([-1.0, 0, 0]), np.array([1.0, 0, 0]), 0.01, tri)[0]


class TestSolve:
    def test_object_beyond_reach_full_close(self):
        skel = finger_chain(2)
        move = curl_movement(skel)
        obj = shapes.uv_sphere(segments=8, rows=4, radii=(0.01, 0.01, 0.01))
        obj.vertices += np.array([10.0, 0, 0])
        result = solve_grasp(skel, move, obj, Pose.identity())
        assert not result.contact.any()
        assert np.all(result.contact_param == 1.0)
        for j in range(len(skel)):
            assert np.allclose(result.rotations[j], move.final[j])

    def test_bone_starting_in_contact_freezes_at_zero(self):
        skel = finger_chain(1)
        move = curl_movement(skel)
        obj = shapes.uv_sphere(segments=8, rows=4, radii=(0.02, 0.02, 0.02))
        obj.vertices += np.array([0.02, 0.0, 0.0])  # overlapping the bone at s=0
        result = solve_grasp(skel, move, obj, Pose.identity())
        assert result.contact[0]
        assert result.contact_param[0] == 0.0
        assert np.allclose(result.rotations[0], move.initial[0])

    def test_contact_param_matches_dense_oracle(self):
        rng = np.random.default_rng(97)
        ds = 1e-3
        tol = STEP + STEP / (2**BISECTION_ITERS) + ds
        checked = 0
        for trial in range(12):
            phalanges = int(rng.integers(1, 4))
            length = float(rng.uniform(0.03, 0.05))
            radius = float(rng.uniform(0.005, 0.01))
            skel = finger_chain(phalanges, length, radius)
            move = curl_movement(skel, total_angle=float(rng.uniform(0.9, 1.8)))
            r_sphere = float(rng.uniform(0.015, 0.03))
            # sphere placed under the finger's flexion arc
            cx = float(rng.uniform(0.3, 0.9)) * length * phalanges
            cy = -(r_sphere + radius + float(rng.uniform(0.0, 0.008)))
            obj = shapes.uv_sphere(segments=8, rows=4, radii=(r_sphere,) * 3)
            obj.vertices += np.array([cx, cy, 0.0])
            root = Pose.identity()
            result = solve_grasp(skel, move, obj, root)
            frozen_o, s_o = dense_first_contacts(skel, move, obj, root, ds=ds)
            assert np.array_equal(result.contact, frozen_o)
            for j in range(len(skel)):
                if result.contact[j]:
                    assert abs(result.contact_param[j] - s_o[j]) <= tol
                    checked += 1
        assert checked >= 6  # the configurations actually exercise contacts

    def test_monotone_freezing(self):
        # once frozen, a bone's rotation never changes: freeze order equals
        # final rotations regardless of later contacts
        skel = finger_chain(3)
        move = curl_movement(skel, total_angle=1.6)
        obj = shapes.uv_sphere(segments=10, rows=5, radii=(0.025,) * 3)
        obj.vertices += np.array([0.07, -0.04, 0.0])
        result = solve_grasp(skel, move, obj, Pose.identity())
        assert result.contact.any()
        for j in result.frozen_joints():
            expected = quat_slerp(move.initial[j], move.final[j], result.contact_param[j])
            assert np.allclose(result.rotations[j], expected)
            assert result.contact_param[j] < 1.0

    def test_no_deep_penetration_at_result(self):
        any_contact = False
        for trial in range(8):
            skel = finger_chain(2)
            move = curl_movement(skel, total_angle=1.5)
            r_sphere = 0.02
            obj = shapes.uv_sphere(segments=10, rows=5, radii=(r_sphere,) * 3)
            obj.vertices += np.array([0.05, -r_sphere - 0.006 - 0.002 * trial, 0.0])
            root = Pose.identity()
            result = solve_grasp(skel, move, obj, root)
            fk = skel.forward_kinematics(result.rotations, root)
            for j in result.frozen_joints():
                any_contact = True
                if result.contact_param[j] == 0.0:
                    continue  # started overlapping; nothing to bound
                p0, p1, radius = skel.bone_capsule(j, *fk[j])
                d = segment_mesh_distance(p0, p1, obj.vertices, obj.triangles)
                # capsule surface may pass the contact offset by at most the
                # bisection tolerance worth of motion
                assert radius - d <= 0.002 + 0.002
        assert any_contact

    def test_arity_independence(self):
        # two far-apart fingers solved together equal each finger solved alone
        length, radius = 0.04, 0.008
        bones = [
            Bone("f1a", -1, [0, 0, 0], [1, 0, 0, 0], radius, length),
            Bone("f1b", 0, [length, 0, 0], [1, 0, 0, 0], radius, length),
        ]
        skel_single = HandSkeleton(bones)
        move_single = curl_movement(skel_single, 1.2)
        obj = shapes.uv_sphere(segments=10, rows=5, radii=(0.02,) * 3)
        obj.vertices += np.array([0.05, -0.03, 0.0])
        res_single = solve_grasp(skel_single, move_single, obj, Pose.identity())

        # same finger embedded in a two-finger hand whose other finger is far away
        bones_two = [
            Bone("root", -1, [0, 0, 0], [1, 0, 0, 0], 1e-4, 1e-4),
            Bone("f1a", 0, [0, 0, 0], [1, 0, 0, 0], radius, length),
            Bone("f1b", 1, [length, 0, 0], [1, 0, 0, 0], radius, length),
            Bone("f2a", 0, [0, 0, 5.0], [1, 0, 0, 0], radius, length),
            Bone("f2b", 3, [length, 0, 0], [1, 0, 0, 0], radius, length),
        ]
        skel_two = HandSkeleton(bones_two)
        initial = np.tile([1.0, 0, 0, 0], (5, 1))
        final = initial.copy()
        for j in range(1, 5):
            final[j] = quat_from_axis_angle([0, 0, -1], 0.6)
        move_two = GraspMovement(initial, final)
        res_two = solve_grasp(skel_two, move_two, obj, Pose.identity())
        assert np.array_equal(res_two.contact[1:3], res_single.contact)
        assert np.allclose(res_two.contact_param[1:3], res_single.contact_param, atol=1e-12)
        assert not res_two.contact[3] and not res_two.contact[4]

    def test_determinism(self):
        skel = finger_chain(3)
        move = curl_movement(skel, 1.5)
        obj = shapes.uv_sphere(segments=10, rows=5, radii=(0.02,) * 3)
        obj.vertices += np.array([0.06, -0.035, 0.0])
        a = solve_grasp(skel, move, obj, Pose.identity())
        b = solve_grasp(skel, move, obj, Pose.identity())
        assert np.array_equal(a.rotations, b.rotations)
        assert np.array_equal(a.contact_param, b.contact_param)

    def test_mismatched_joint_sets_rejected(self):
        skel = finger_chain(3)
        move = curl_movement(finger_chain(2))
        obj = shapes.cube(0.02)
        with pytest.raises(SchemaError):
            solve_grasp(skel, move, obj, Pose.identity())

    def test_empty_mesh_rejected(self):
        skel = finger_chain(1)
        move = curl_movement(skel)
        with pytest.raises(SchemaError):
            solve_grasp(skel, move, TriMesh(np.zeros((3, 3)), np.zeros((0, 3), dtype=int)), Pose.identity())


class TestHandFile:
    def test_load_round_trip(self, tmp_path):
        import json

        doc = {
            "joints": [
                {"name": "root", "parent": -1, "offset": [0, 0, 0], "capsule_radius": 0.01, "capsule_length": 0.03},
                {"name": "tip", "parent": 0, "offset": [0.03, 0, 0], "capsule_radius": 0.008, "capsule_length": 0.025},
            ],
            "initial_pose": [[1, 0, 0, 0], [1, 0, 0, 0]],
            "final_pose": [[0.9238795, 0, 0, 0.3826834], [0.9238795, 0, 0, 0.3826834]],
        }
        path = tmp_path / "hand.json"
        path.write_text(json.dumps(doc))
        skel, move = load_hand_file(str(path))
        assert len(skel) == 2
        assert skel.bones[1].parent == 0
        assert move.initial.shape == (2, 4)

    def test_two_roots_rejected(self):
        with pytest.raises(SchemaError):
            HandSkeleton(
                [
                    Bone("a", -1, [0, 0, 0], [1, 0, 0, 0], 0.01, 0.02),
                    Bone("b", -1, [0, 0, 0], [1, 0, 0, 0], 0.01, 0.02),
                ]
            )

    def test_arbitrary_arity_supported(self):
        # five fingers with varying phalanx counts, one shared root
        bones = [Bone("wrist", -1, [0, 0, 0], [1, 0, 0, 0], 0.02, 0.01)]
        for f in range(5):
            parent = 0
            for p in range(2 + f % 3):
                bones.append(
                    Bone(f"f{f}p{p}", parent, [0.03, 0, 0.01 * f], [1, 0, 0, 0], 0.007, 0.03)
                )
                parent = len(bones) - 1
        skel = HandSkeleton(bones)
        n = len(skel)
        move = GraspMovement(np.tile([1, 0, 0, 0], (n, 1)), np.tile([1, 0, 0, 0], (n, 1)))
        obj = shapes.cube(0.02, center=(10, 0, 0))
        result = solve_grasp(skel, move, obj, Pose.identity())
        assert len(result.rotations) == n
