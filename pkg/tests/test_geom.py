import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armpoint import geom
from armpoint.errors import DegenerateVector, SeriesTooShort


def unit(v):
    return np.asarray(v) / np.linalg.norm(v)


class TestAngleBetween:
    def test_parallel(self):
        assert geom.angle_between([1, 0, 0], [2, 0, 0]) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal(self):
        assert geom.angle_between([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)

    def test_antiparallel(self):
        assert geom.angle_between([1, 0, 0], [-1, 0, 0]) == pytest.approx(math.pi)

    def test_degenerate(self):
        with pytest.raises(DegenerateVector):
            geom.angle_between([0, 0, 0], [1, 0, 0])
        with pytest.raises(DegenerateVector):
            geom.angle_between([1, 0, 0], [1e-12, 0, 0])

    @given(
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        st.floats(0.1, 50),
        st.floats(0.1, 50),
    )
    def test_symmetry_and_scale_invariance(self, u, v, a, b):
        u, v = np.array(u), np.array(v)
        if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
            return
        assert geom.angle_between(u, v) == pytest.approx(geom.angle_between(v, u))
        assert geom.angle_between(a * u, b * v) == pytest.approx(
            geom.angle_between(u, v), abs=1e-9
        )


class TestQuaternions:
    def test_mul_identity(self):
        q = geom.quat_from_axis_angle([0, 0, 1], 0.7)
        assert np.allclose(geom.quat_mul(geom.quat_identity(), q), q)

    def test_rotate_basis(self):
        # 90 degrees about z sends +y to -x
        q = geom.quat_from_axis_angle([0, 0, 1], math.pi / 2)
        v = geom.quat_rotate(q, np.array([0.0, 1.0, 0.0]))
        assert np.allclose(v, [-1.0, 0.0, 0.0], atol=1e-12)

    def test_rotate_matches_matrix(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = geom.quat_normalize(rng.normal(size=4))
            v = rng.normal(size=3)
            assert np.allclose(geom.quat_rotate(q, v), geom.quat_to_mat3(q) @ v, atol=1e-12)

    def test_canonical_flips_sign(self):
        q = geom.quat_from_axis_angle([1, 0, 0], 0.4)
        assert np.allclose(geom.quat_canonical(-q), q)

    def test_geodesic(self):
        qa = geom.quat_from_axis_angle([0, 1, 0], 0.3)
        qb = geom.quat_from_axis_angle([0, 1, 0], 0.9)
        assert geom.quat_geodesic(qa, qb) == pytest.approx(0.6, abs=1e-12)
        # double cover: -q is the same rotation
        assert geom.quat_geodesic(qa, -qa) == pytest.approx(0.0, abs=1e-9)

    def test_mat_quat_roundtrip(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            q = geom.quat_canonical(rng.normal(size=4))
            m = geom.quat_to_mat3(q)
            assert geom.quat_geodesic(geom.mat3_to_quat(m), q) < 1e-9

    def test_euler_roundtrip(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            q = geom.quat_canonical(rng.normal(size=4))
            angles = geom.euler_xyz_from_quat(q)
            q2 = geom.quat_from_euler(angles, "xyz")
            assert geom.quat_geodesic(q, q2) < 1e-8

    def test_euler_gimbal(self):
        q = geom.quat_from_euler([0.3, math.pi / 2, -0.2], "xyz")
        angles = geom.euler_xyz_from_quat(q)
        q2 = geom.quat_from_euler(angles, "xyz")
        assert geom.quat_geodesic(q, q2) < 1e-8


def three_joint_chain():
    return geom.Skeleton(
        names=("root", "elbow", "hand"),
        parents=(-1, 0, 1),
        offsets=np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]]),
        landmarks={"root": 0, "right_elbow": 1, "right_hand": 2},
    )


class TestForwardKinematics:
    def test_identity_cumulative_offsets(self):
        skel = three_joint_chain()
        pose = geom.identity_pose(skel)
        pos = geom.forward_kinematics(skel, pose)
        assert np.allclose(pos, [[0, 0, 0], [0, 1, 0], [0, 2, 0]])

    def test_rotated_parent(self):
        # child offset (0,1,0), parent rotated 90 degrees about z -> child at parent + (-1,0,0)
        skel = geom.Skeleton(
            names=("root", "child"),
            parents=(-1, 0),
            offsets=np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        )
        rots = np.stack([geom.quat_from_axis_angle([0, 0, 1], math.pi / 2), geom.quat_identity()])
        pos = geom.forward_kinematics(skel, geom.Pose(np.zeros(3), rots))
        assert np.allclose(pos[1], [-1.0, 0.0, 0.0], atol=1e-12)

    def test_translation_equivariance(self):
        skel = three_joint_chain()
        t = np.array([0.3, -0.2, 1.1])
        base = geom.forward_kinematics(skel, geom.identity_pose(skel))
        moved = geom.forward_kinematics(
            skel, geom.Pose(skel.offsets[0] + t, geom.identity_pose(skel).rotations)
        )
        assert np.allclose(moved, base + t)

    def test_bone_lengths_preserved(self):
        skel = three_joint_chain()
        rng = np.random.default_rng(3)
        for _ in range(25):
            rots = geom.quat_normalize(rng.normal(size=(3, 4)))
            pos = geom.forward_kinematics(skel, geom.Pose(rng.normal(size=3), rots))
            for j in range(1, 3):
                bone = np.linalg.norm(pos[j] - pos[skel.parents[j]])
                assert bone == pytest.approx(np.linalg.norm(skel.offsets[j]), abs=1e-9)

    def test_batch_matches_single(self):
        skel = three_joint_chain()
        rng = np.random.default_rng(4)
        F = 7
        roots = rng.normal(size=(F, 3))
        rots = geom.quat_normalize(rng.normal(size=(F, 3, 4)))
        batch = geom.forward_kinematics_batch(skel, roots, rots)
        for f in range(F):
            single = geom.forward_kinematics(skel, geom.Pose(roots[f], rots[f]))
            assert np.allclose(batch[f], single, atol=1e-12)


class TestFiniteDifference:
    def test_linear_ramp(self):
        out = geom.finite_difference([0.0, 1.0, 2.0, 3.0], dt=1.0, order=1)
        assert np.allclose(out, [1.0, 1.0, 1.0])

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_constant_zero(self, order):
        out = geom.finite_difference(np.full(10, 4.2), dt=0.1, order=order)
        assert np.allclose(out, 0.0)
        assert out.shape[0] == 10 - order

    def test_sin_derivative_oracle(self):
        dt = 0.001
        t = np.arange(0.0, 2.0, dt)
        approx = geom.finite_difference(np.sin(t), dt=dt, order=1)
        exact = np.cos(t[:-1])
        assert np.max(np.abs(approx - exact)) < 1e-3

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            geom.finite_difference([1.0, 2.0], dt=1.0, order=2)

    @given(st.integers(5, 30), st.integers(1, 3))
    @settings(max_examples=30)
    def test_length_reduction(self, n, order):
        series = np.linspace(0, 1, n)
        out = geom.finite_difference(series, dt=0.5, order=order)
        assert out.shape[0] == n - order


class TestSkeleton:
    def test_landmark_inference_bvh_style(self):
        names = ("Hips", "Spine", "LeftArm", "LeftForeArm", "LeftHand", "LeftHandIndex1",
                 "RightArm", "RightForeArm", "RightHand")
        parents = (-1, 0, 1, 2, 3, 4, 1, 6, 7)
        marks = geom.infer_landmarks(names, parents)
        assert marks["root"] == 0
        assert marks["left_shoulder"] == 2
        assert marks["left_elbow"] == 3
        assert marks["left_hand"] == 4
        assert marks["right_hand"] == 8

    def test_rejects_bad_topology(self):
        with pytest.raises(ValueError):
            geom.Skeleton(names=("a", "b"), parents=(-1, 1), offsets=np.zeros((2, 3)))
        with pytest.raises(ValueError):
            geom.Skeleton(names=("a", "b"), parents=(-1, -1), offsets=np.zeros((2, 3)))
