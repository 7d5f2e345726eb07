import math

import numpy as np
import pytest

from armpoint import geom, mocap, synth
from armpoint.errors import Unreachable
from armpoint.geom import Hand
from armpoint.mocap import OCTANT_ORDER, SegmentationParams
from armpoint.synth import (
    SynthParams,
    default_skeleton,
    generate_corpus,
    generate_pointing_clip,
    hold_arm_angles,
    min_jerk,
    min_jerk_speed,
    sample_octant_target,
    solve_hold_pose,
)

FRONT_TARGET = np.array([-0.15, 1.45, 0.42])


class TestMinJerk:
    def test_boundaries(self):
        assert min_jerk(0.0) == 0.0
        assert min_jerk(1.0) == pytest.approx(1.0)

    def test_midpoint(self):
        assert min_jerk(0.5) == pytest.approx(0.5)

    def test_monotone(self):
        s = np.linspace(0, 1, 500)
        values = np.array([min_jerk(v) for v in s])
        assert np.all(np.diff(values) >= 0)

    def test_peak_rate_via_finite_differences(self):
        # independent oracle: differentiate the sampled ease numerically
        s = np.linspace(0, 1, 20001)
        values = np.array([min_jerk(v) for v in s])
        rate = geom.finite_difference(values, dt=s[1] - s[0], order=1)
        assert np.max(rate) == pytest.approx(1.875, abs=1e-5)
        assert s[np.argmax(rate)] == pytest.approx(0.5, abs=1e-3)
        # closed form agrees
        assert min_jerk_speed(0.5) == pytest.approx(1.875)


class TestHoldPose:
    def setup_method(self):
        self.skel = default_skeleton()
        self.positions = geom.forward_kinematics(self.skel, geom.identity_pose(self.skel))

    @pytest.mark.parametrize("align", [0.0, 5.0, 20.0, 45.0])
    def test_exact_alignment(self, align):
        shoulder = self.positions[self.skel.shoulder(Hand.RIGHT)]
        upper, fore = synth.arm_lengths(self.skel, Hand.RIGHT)
        elbow, hand = solve_hold_pose(shoulder, FRONT_TARGET, upper, fore, align)
        assert np.linalg.norm(elbow - shoulder) == pytest.approx(upper, abs=1e-12)
        assert np.linalg.norm(hand - elbow) == pytest.approx(fore, abs=1e-12)
        angle = geom.angle_between(FRONT_TARGET - hand, hand - elbow)
        assert math.degrees(angle) == pytest.approx(align, abs=1e-8)

    def test_unreachable(self):
        shoulder = self.positions[self.skel.shoulder(Hand.RIGHT)]
        upper, fore = synth.arm_lengths(self.skel, Hand.RIGHT)
        with pytest.raises(Unreachable):
            solve_hold_pose(shoulder, shoulder + np.array([0.0, 0.0, 2.0]), upper, fore)

    def test_hold_angles_reproduce_pose(self):
        angles = hold_arm_angles(self.skel, Hand.RIGHT, FRONT_TARGET, 0.0)
        q_shoulder = geom.quat_from_euler(angles[:3], "xyz")
        q_elbow = np.array(
            [math.cos(angles[3] / 2), math.sin(angles[3] / 2), 0.0, 0.0]
        )
        rots = np.zeros((self.skel.n_joints, 4))
        rots[:, 0] = 1.0
        rots[self.skel.shoulder(Hand.RIGHT)] = q_shoulder
        rots[self.skel.elbow(Hand.RIGHT)] = q_elbow
        pose = geom.Pose(self.skel.offsets[0], rots)
        pos = geom.forward_kinematics(self.skel, pose)
        elbow = pos[self.skel.elbow(Hand.RIGHT)]
        hand = pos[self.skel.hand(Hand.RIGHT)]
        theta = 1.0 - geom.angle_between(FRONT_TARGET - hand, hand - elbow) / math.pi
        assert theta == pytest.approx(1.0, abs=1e-8)


class TestGeneratePointingClip:
    def make(self, **kwargs):
        defaults = dict(target=FRONT_TARGET, hand=Hand.RIGHT, seed=3)
        defaults.update(kwargs)
        return generate_pointing_clip(default_skeleton(), SynthParams(**defaults))

    def test_basic_shape(self):
        clip = self.make()
        assert clip.n_frames > 2
        assert len(clip.targets) == 1
        assert len(clip.annotations) == 1
        mark = clip.annotations[0]
        assert mark.hand is Hand.RIGHT
        assert 0 < mark.onset < mark.peak_velocity <= mark.hold_start < mark.offset <= clip.n_frames

    def test_zero_alignment_holds_theta_one(self):
        clip = self.make(alignment_error=0.0)
        skel = clip.skeleton
        mark = clip.annotations[0]
        positions = clip.joint_positions
        target = clip.targets[0].position
        # sample well inside the hold plateau
        mid = (mark.hold_start + 20, mark.hold_start + 40)
        for f in range(*mid):
            elbow = positions[f, skel.elbow(Hand.RIGHT)]
            hand = positions[f, skel.hand(Hand.RIGHT)]
            theta = 1.0 - geom.angle_between(target - hand, hand - elbow) / math.pi
            assert theta == pytest.approx(1.0, abs=1e-6)

    def test_injected_alignment_error_measured(self):
        clip = self.make(alignment_error=20.0)
        seg = mocap.segment_pointing(clip)[0]
        profile = mocap.precision_profile(seg)
        hold_rel = seg.hold_start - seg.onset
        plateau = profile[hold_rel + 20 : hold_rel + 40]
        assert np.allclose(plateau, 1.0 - 20.0 / 180.0, atol=1e-3)

    def test_hand_tracks_min_jerk_peak_speed(self):
        rise = 0.7
        clip = self.make(rise_time=rise, retract_time=0.85, alignment_error=10.0)
        mark = clip.annotations[0]
        skel = clip.skeleton
        hand_idx = skel.hand(Hand.RIGHT)
        hand_idle = clip.joint_positions[0, hand_idx]
        hand_hold = clip.joint_positions[mark.hold_start + 25, hand_idx]
        travel = float(np.linalg.norm(hand_hold - hand_idle))
        seg = mocap.Segment(clip=clip, hand=Hand.RIGHT, onset=mark.onset,
                            peak_velocity=mark.peak_velocity,
                            hold_start=mark.hold_start, offset=mark.offset)
        stats = mocap.kinematic_stats(seg)
        assert stats.peak_velocity == pytest.approx(1.875 * travel / rise * 1000.0, rel=0.01)

    def test_determinism(self):
        a = mocap.write_clip_json(self.make(noise_amplitude=0.01, seed=9))
        b = mocap.write_clip_json(self.make(noise_amplitude=0.01, seed=9))
        c = mocap.write_clip_json(self.make(noise_amplitude=0.01, seed=10))
        assert a == b
        assert a != c

    def test_unreachable_target(self):
        with pytest.raises(Unreachable):
            self.make(target=np.array([0.0, 1.45, 1.5]))


class TestSegmentationOracle:
    @pytest.mark.parametrize(
        "target,hand",
        [
            (np.array([-0.18, 1.55, 0.40]), Hand.RIGHT),   # front top right side
            (np.array([0.25, 1.10, 0.35]), Hand.LEFT),     # front bottom left side
            (np.array([-0.30, 1.60, -0.25]), Hand.RIGHT),  # back top
        ],
    )
    def test_roundtrip_recovery(self, target, hand):
        params = SynthParams(target=target, hand=hand, seed=17)
        clip = generate_pointing_clip(default_skeleton(), params)
        mark = clip.annotations[0]
        segments = mocap.segment_pointing(clip)
        assert len(segments) == 1
        seg = segments[0]
        assert seg.hand is hand
        assert abs(seg.onset - mark.onset) <= 2
        assert abs(seg.offset - mark.offset) <= 2
        assert abs(seg.hold_start - mark.hold_start) <= 2
        assert seg.target_index == 0

    def test_two_points_in_one_clip(self):
        # concatenate two synthetic points separated by idle
        skel = default_skeleton()
        first = generate_pointing_clip(skel, SynthParams(target=FRONT_TARGET, seed=1))
        second = generate_pointing_clip(
            skel, SynthParams(target=np.array([-0.25, 1.15, 0.35]), seed=2)
        )
        gap = int(1.0 * first.fps)
        idle_rots = np.zeros((gap, skel.n_joints, 4))
        idle_rots[:, :, 0] = 1.0
        rots = np.concatenate([first.rotations, idle_rots, second.rotations])
        roots = np.concatenate(
            [first.root_positions, np.tile(first.root_positions[0], (gap, 1)),
             second.root_positions]
        )
        combined = mocap.Clip(
            skeleton=skel, fps=first.fps, root_positions=roots, rotations=rots,
            targets=first.targets + second.targets, source="combined",
        )
        segments = mocap.segment_pointing(combined)
        assert len(segments) == 2
        assert segments[0].offset <= segments[1].onset

    def test_noise_free_stats_match_annotation(self):
        params = SynthParams(target=FRONT_TARGET, seed=23, retract_time=0.8)
        clip = generate_pointing_clip(default_skeleton(), params)
        mark = clip.annotations[0]
        seg = mocap.segment_pointing(clip)[0]
        frame_time = 1.0 / clip.fps
        assert abs((seg.hold_start - seg.onset) - (mark.hold_start - mark.onset)) <= 1
        recovered = mocap.kinematic_stats(seg)
        annotated = mocap.kinematic_stats(
            mocap.Segment(clip=clip, hand=mark.hand, onset=mark.onset,
                          peak_velocity=mark.peak_velocity, hold_start=mark.hold_start,
                          offset=mark.offset)
        )
        assert abs(recovered.rise_time - annotated.rise_time) <= frame_time + 1e-9
        assert abs(recovered.duration - annotated.duration) <= 2 * frame_time + 1e-9
        assert recovered.peak_velocity == pytest.approx(annotated.peak_velocity, rel=1e-6)


class TestCorpus:
    def test_single_clip(self):
        clips = generate_corpus(1, seed=5)
        assert len(clips) == 1

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            generate_corpus(0)

    def test_all_weight_on_one_octant(self):
        weights = np.zeros(8)
        weights[0] = 1.0  # Front-Top-Left
        clips = generate_corpus(6, octant_weights=weights, seed=8)
        for clip in clips:
            body = mocap.BodyFrame.from_clip(clip)
            octant = mocap.classify_octant(clip.targets[0].position, body)
            assert octant == OCTANT_ORDER[0]
            assert clip.annotations[0].hand is Hand.LEFT

    def test_every_octant_feasible(self):
        rng = np.random.default_rng(21)
        skel = default_skeleton()
        for octant in OCTANT_ORDER:
            target, hand = sample_octant_target(rng, octant, skel, 20.0)
            body = mocap.BodyFrame(origin=skel.offsets[0], shoulder_height=1.35)
            assert mocap.classify_octant(target, body) == octant
            assert hand is (Hand.LEFT if octant.left else Hand.RIGHT)

    def test_corpus_deterministic(self):
        a = generate_corpus(4, seed=33)
        b = generate_corpus(4, seed=33)
        for ca, cb in zip(a, b):
            assert mocap.write_clip_json(ca) == mocap.write_clip_json(cb)

    def test_corpus_segmentable(self):
        for clip in generate_corpus(8, seed=41):
            segments = mocap.segment_pointing(clip)
            assert len(segments) == 1
            assert segments[0].hand is clip.annotations[0].hand
