"""Synthetic pointing-clip generator with exactly known ground truth.

Clips follow a minimum-jerk hand path from an idle (arm down) pose to a hold
pose aimed at a 3D target, hold, then retract. Arm angles come from a 2-link
analytic solution (3-DoF shoulder + 1-DoF hinge elbow) with a constant swivel
angle along the path, so the hand tracks the commanded path exactly and the
hold pose misses the target direction by a requested alignment error.

Generated clips double as the test oracle: their annotations record the
onset/peak/hold/offset frames computed from the final trajectory with the
same landmark definitions the segmenter uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import geom, mocap
from .errors import Unreachable
from .geom import Hand, Skeleton
from .mocap import Clip, Octant, OCTANT_ORDER, SegmentationParams, SegmentMark, Target

DOWN = np.array([0.0, -1.0, 0.0])
FORWARD = np.array([0.0, 0.0, 1.0])
BACKWARD = np.array([0.0, 0.0, -1.0])
X_AXIS = np.array([1.0, 0.0, 0.0])

# target sampling envelope (meters / radians)
TARGET_SHELL = (0.32, 0.54)
OCTANT_MARGIN = 0.12
OCTANT_EXTENT = 0.70
MIN_DOWN_ANGLE = math.radians(35.0)
MIN_SAGITTAL_TRAVEL = 0.33
ELBOW_CLEARANCE = 0.03

# default octant mix for corpus sampling, ordered like OCTANT_ORDER
DEFAULT_OCTANT_WEIGHTS = np.array([11.0, 15.0, 8.0, 8.0, 14.0, 12.0, 7.0, 8.0])


def default_skeleton() -> Skeleton:
    """Desk-scale torso-plus-arms rig used by the generator and simulator."""
    return Skeleton(
        names=(
            "root",
            "chest",
            "neck",
            "left_shoulder",
            "left_elbow",
            "left_hand",
            "right_shoulder",
            "right_elbow",
            "right_hand",
        ),
        parents=(-1, 0, 1, 1, 3, 4, 1, 6, 7),
        offsets=np.array(
            [
                [0.0, 0.95, 0.0],
                [0.0, 0.25, 0.0],
                [0.0, 0.20, 0.0],
                [0.20, 0.15, 0.0],
                [0.0, -0.30, 0.0],
                [0.0, -0.27, 0.0],
                [-0.20, 0.15, 0.0],
                [0.0, -0.30, 0.0],
                [0.0, -0.27, 0.0],
            ]
        ),
    )


@dataclass(frozen=True)
class SynthParams:
    """Everything that determines one synthetic clip (deterministic per seed)."""

    target: np.ndarray
    hand: Hand = Hand.RIGHT
    rise_time: float = 0.71
    hold_time: float = 1.0
    retract_time: float = 0.7
    alignment_error: float = 20.0  # degrees the forearm misses the target ray by
    noise_amplitude: float = 0.0  # meters, filtered white noise on the hand path
    seed: int = 0
    fps: float = 120.0
    lead_time: float = 0.6
    tail_time: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64).reshape(3))
        if min(self.rise_time, self.hold_time, self.retract_time) <= 0:
            raise ValueError("phase times must be positive")
        if not 0.0 <= self.alignment_error < 180.0:
            raise ValueError("alignment_error must be in [0, 180) degrees")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")
        if self.fps <= 0 or self.lead_time < 0 or self.tail_time < 0:
            raise ValueError("fps must be positive and paddings non-negative")


# ---------------------------------------------------------------------------
# minimum jerk


def min_jerk(s: float) -> float:
    """Quintic ease 10s^3 - 15s^4 + 6s^5: monotone on [0,1] with zero
    end-point velocity; its rate peaks at 1.875 at s = 0.5."""
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def min_jerk_speed(s: float) -> float:
    """Derivative of min_jerk: 30 s^2 (1-s)^2."""
    return 30.0 * s * s * (1.0 - s) * (1.0 - s)


# ---------------------------------------------------------------------------
# arm geometry


def _perp_toward(reference: np.ndarray, axis: np.ndarray) -> np.ndarray | None:
    p = reference - np.dot(reference, axis) * axis
    n = np.linalg.norm(p)
    if n < 1e-8:
        return None
    return p / n


def _swivel_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b1 = _perp_toward(DOWN, axis)
    if b1 is None:
        b1 = _perp_toward(FORWARD, axis)
    b2 = np.cross(axis, b1)
    return b1, b2


def arm_lengths(skel: Skeleton, hand: Hand) -> tuple[float, float]:
    upper = float(np.linalg.norm(skel.offsets[skel.elbow(hand)]))
    fore = float(np.linalg.norm(skel.offsets[skel.hand(hand)]))
    return upper, fore


def _elbow_circle(shoulder, hand_pos, upper, fore):
    """Circle of feasible elbow positions for a hand position; the hand is
    radially clamped into the annulus the arm can actually reach."""
    rel = hand_pos - shoulder
    d_raw = float(np.linalg.norm(rel))
    d = min(max(d_raw, abs(upper - fore) + 1e-6), upper + fore)
    axis = rel / d_raw if d_raw > 1e-12 else DOWN
    effective = shoulder + axis * d
    a = (upper * upper + d * d - fore * fore) / (2.0 * d)
    r = math.sqrt(max(0.0, upper * upper - a * a))
    return shoulder + a * axis, r, axis, effective


def _arm_quats(shoulder, elbow, hand_pos, hinge_prev):
    """Shoulder and elbow local quaternions placing the arm at (elbow, hand).

    In the rest pose both segments point straight down (-Y) and the elbow
    hinge is local +X. The hinge axis keeps temporal coherence: the geometric
    bend-plane normal is sign-flipped toward ``hinge_prev``, and reused
    outright when the arm is straight and the plane is undefined.
    """
    u = elbow - shoulder
    u = u / np.linalg.norm(u)
    f = hand_pos - elbow
    f = f / np.linalg.norm(f)
    cross = np.cross(u, f)
    s = float(np.linalg.norm(cross))
    c = float(np.dot(u, f))
    if s < 1e-7:
        n = _perp_toward(hinge_prev, u)
        if n is None:
            n = _perp_toward(X_AXIS, u)
            if n is None:
                n = _perp_toward(FORWARD, u)
        bend = math.atan2(s, c)
    else:
        n = cross / s
        bend = math.atan2(s, c)
        if float(np.dot(n, hinge_prev)) < 0.0:
            n = -n
            bend = -bend
    m = np.column_stack([n, -u, np.cross(n, -u)])
    q_shoulder = geom.mat3_to_quat(m)
    half = 0.5 * bend
    q_elbow = np.array([math.cos(half), math.sin(half), 0.0, 0.0])
    return q_shoulder, q_elbow, n


def solve_hold_pose(
    shoulder: np.ndarray,
    target: np.ndarray,
    upper: float,
    fore: float,
    alignment_error_deg: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Elbow and hand positions for a hold pose pointing at ``target``.

    The elbow drops below the shoulder-target line far enough that the hand
    stays short of the target; the forearm then misses the hand-to-target
    ray by exactly ``alignment_error_deg`` (drooping toward the floor).
    Raises Unreachable when the target is outside the arm's annulus.
    """
    rel = target - shoulder
    reach_dist = float(np.linalg.norm(rel))
    if reach_dist > upper + fore - 1e-6:
        raise Unreachable(
            f"target {reach_dist:.3f} m from shoulder exceeds reach {upper + fore:.3f} m"
        )
    if reach_dist < 0.08:
        raise Unreachable("target is too close to the shoulder to point at")
    aim = rel / reach_dist

    clearance = fore + ELBOW_CLEARANCE
    cos_needed = (reach_dist**2 + upper**2 - clearance**2) / (2.0 * reach_dist * upper)
    alpha = max(math.radians(25.0), math.acos(min(1.0, max(-1.0, cos_needed))))
    drop = _perp_toward(DOWN, aim)
    if drop is None:
        drop = _perp_toward(BACKWARD, aim)
    elbow_dir = math.cos(alpha) * aim + math.sin(alpha) * drop
    elbow = shoulder + upper * elbow_dir

    to_target = target - elbow
    w = float(np.linalg.norm(to_target))
    w_hat = to_target / w
    delta = math.radians(alignment_error_deg)
    if delta <= 1e-12:
        forearm = w_hat
    else:
        droop = _perp_toward(DOWN, w_hat)
        if droop is None:
            droop = _perp_toward(BACKWARD, w_hat)

        def miss(eta):
            ce = math.cos(eta)
            num = w * ce - fore
            den = math.sqrt(w * w + fore * fore - 2.0 * w * fore * ce)
            return math.acos(min(1.0, max(-1.0, num / den))) - delta

        eta = brentq(miss, 0.0, math.pi - 1e-9, xtol=1e-13)
        forearm = math.cos(eta) * w_hat + math.sin(eta) * droop
    return elbow, elbow + fore * forearm


def hold_arm_angles(
    skel: Skeleton, hand: Hand, target: np.ndarray, alignment_error_deg: float = 0.0
) -> np.ndarray:
    """Joint angles [shoulder x, y, z, elbow] of the hold pose for a target.

    Shoulder angles are the intrinsic x-y-z decomposition of the aim
    rotation; the elbow angle is the signed hinge bend. This is the scripted
    expert's answer and the terminal pose of generated clips.
    """
    positions = geom.forward_kinematics(skel, geom.identity_pose(skel))
    shoulder = positions[skel.shoulder(hand)]
    upper, fore = arm_lengths(skel, hand)
    elbow, hand_pos = solve_hold_pose(shoulder, target, upper, fore, alignment_error_deg)
    q_shoulder, q_elbow, _ = _arm_quats(shoulder, elbow, hand_pos, X_AXIS)
    bend = 2.0 * math.atan2(q_elbow[1], q_elbow[0])
    return np.array([*geom.euler_xyz_from_quat(q_shoulder), bend])


# ---------------------------------------------------------------------------
# clip generation


def _round_frames(seconds: float, fps: float, minimum: int = 0) -> int:
    return max(minimum, int(round(seconds * fps)))


def generate_pointing_clip(
    skel: Skeleton,
    params: SynthParams,
    source: str | None = None,
    seg_params: SegmentationParams | None = None,
) -> Clip:
    """One annotated single-target pointing clip.

    The hand follows idle -> min-jerk rise -> hold -> min-jerk retract ->
    idle along straight lines, with optional two-sample-averaged white noise
    added to the hand path before the angles are solved. Annotations carry
    the onset/peak-velocity/hold-start/offset frames measured on the final
    trajectory with the segmenter's landmark rules, so they are exact ground
    truth for the segmentation oracle.
    """
    if not skel.has_arm(params.hand):
        raise ValueError(f"skeleton has no {params.hand.value} arm")
    fps = params.fps
    upper, fore = arm_lengths(skel, params.hand)
    idle = geom.identity_pose(skel)
    positions = geom.forward_kinematics(skel, idle)
    shoulder = positions[skel.shoulder(params.hand)]
    hand_idle = positions[skel.hand(params.hand)]

    elbow_hold, hand_hold = solve_hold_pose(
        shoulder, params.target, upper, fore, params.alignment_error
    )

    lead_n = _round_frames(params.lead_time, fps)
    rise_n = _round_frames(params.rise_time, fps, minimum=2)
    hold_n = _round_frames(params.hold_time, fps, minimum=1)
    retract_n = _round_frames(params.retract_time, fps, minimum=2)
    tail_n = _round_frames(params.tail_time, fps)
    t0, t1 = lead_n, lead_n + rise_n
    t2, t3 = lead_n + rise_n + hold_n, lead_n + rise_n + hold_n + retract_n
    n_frames = t3 + tail_n + 1

    hand_path = np.empty((n_frames, 3))
    for k in range(n_frames):
        if k < t0:
            hand_path[k] = hand_idle
        elif k <= t1:
            hand_path[k] = hand_idle + min_jerk((k - t0) / rise_n) * (hand_hold - hand_idle)
        elif k < t2:
            hand_path[k] = hand_hold
        elif k <= t3:
            hand_path[k] = hand_hold + min_jerk((k - t2) / retract_n) * (hand_idle - hand_hold)
        else:
            hand_path[k] = hand_idle

    rng = np.random.default_rng(params.seed)
    if params.noise_amplitude > 0.0:
        raw = rng.normal(0.0, params.noise_amplitude, size=(n_frames, 3))
        hand_path = hand_path + 0.5 * (raw + np.vstack([raw[:1], raw[:-1]]))

    # constant swivel along the path, taken from the hold pose
    center, radius, axis, _ = _elbow_circle(shoulder, hand_hold, upper, fore)
    b1, b2 = _swivel_basis(axis)
    rel = elbow_hold - center
    swivel = math.atan2(float(np.dot(rel, b2)), float(np.dot(rel, b1)))

    sh_idx = skel.shoulder(params.hand)
    el_idx = skel.elbow(params.hand)
    rotations = np.zeros((n_frames, skel.n_joints, 4))
    rotations[:, :, 0] = 1.0
    hinge = X_AXIS
    cs, sn = math.cos(swivel), math.sin(swivel)
    for k in range(n_frames):
        center, radius, axis, hand_eff = _elbow_circle(shoulder, hand_path[k], upper, fore)
        b1, b2 = _swivel_basis(axis)
        elbow = center + radius * (cs * b1 + sn * b2)
        q_shoulder, q_elbow, hinge = _arm_quats(shoulder, elbow, hand_eff, hinge)
        rotations[k, sh_idx] = q_shoulder
        rotations[k, el_idx] = q_elbow

    root = skel.offsets[skel.root_index]
    clip = Clip(
        skeleton=skel,
        fps=fps,
        root_positions=np.tile(root, (n_frames, 1)),
        rotations=rotations,
        targets=(Target("target-0", params.target),),
        source=source or f"synth-seed{params.seed}",
    )
    clip.annotations = _annotate(clip, params.hand, seg_params)
    return clip


def _annotate(
    clip: Clip, hand: Hand, seg_params: SegmentationParams | None
) -> tuple[SegmentMark, ...]:
    seg_params = seg_params or SegmentationParams()
    disp = mocap.sagittal_displacement(clip, hand)
    speed = mocap.hand_speed(clip, hand)
    peak = int(np.argmax(disp))
    if disp[peak] < seg_params.min_peak_height:
        return ()
    try:
        onset, pv, hold, offset = mocap.mark_from_displacement(disp, speed, peak, seg_params)
        return (
            SegmentMark(
                hand=hand, onset=onset, peak_velocity=pv, hold_start=hold, offset=offset, target=0
            ),
        )
    except ValueError:
        return ()


# ---------------------------------------------------------------------------
# corpus sampling


def sample_octant_target(
    rng: np.random.Generator,
    octant: Octant,
    skel: Skeleton,
    alignment_error_deg: float = 0.0,
    max_tries: int = 5000,
) -> tuple[np.ndarray, Hand]:
    """Random target inside one octant that a pointing clip can actually use.

    Rejection-samples the octant box intersected with a spherical shell
    around the matching shoulder, keeps the aim direction well away from
    straight down, and requires enough sagittal hand travel for the default
    segmentation thresholds to fire. The pointing hand is the target's side.
    """
    hand = Hand.LEFT if octant.left else Hand.RIGHT
    positions = geom.forward_kinematics(skel, geom.identity_pose(skel))
    shoulder = positions[skel.shoulder(hand)]
    hand_idle = positions[skel.hand(hand)]
    upper, fore = arm_lengths(skel, hand)
    root = skel.offsets[skel.root_index]
    shoulder_height = float(
        np.mean(
            [positions[skel.shoulder(h)][1] for h in (Hand.LEFT, Hand.RIGHT) if skel.has_arm(h)]
        )
    )
    for _ in range(max_tries):
        x = rng.uniform(OCTANT_MARGIN, OCTANT_EXTENT) * (1.0 if octant.left else -1.0)
        y = rng.uniform(OCTANT_MARGIN, OCTANT_EXTENT * 0.85) * (1.0 if octant.top else -1.0)
        z = rng.uniform(OCTANT_MARGIN, OCTANT_EXTENT) * (1.0 if octant.front else -1.0)
        target = np.array([root[0] + x, shoulder_height + y, root[2] + z])
        rel = target - shoulder
        dist = float(np.linalg.norm(rel))
        if not TARGET_SHELL[0] <= dist <= TARGET_SHELL[1]:
            continue
        if math.acos(min(1.0, max(-1.0, float(np.dot(rel / dist, DOWN))))) < MIN_DOWN_ANGLE:
            continue
        try:
            _, hand_hold = solve_hold_pose(shoulder, target, upper, fore, alignment_error_deg)
        except Unreachable:
            continue
        travel = hand_hold - hand_idle
        if math.hypot(travel[1], travel[2]) < MIN_SAGITTAL_TRAVEL:
            continue
        return target, hand
    raise RuntimeError(f"could not sample a feasible target in octant {octant.label}")


def generate_corpus(
    n: int,
    octant_weights: np.ndarray | None = None,
    seed: int = 0,
    skeleton: Skeleton | None = None,
    noise_amplitude: float = 0.0,
    alignment_error: float | None = None,
    fps: float = 120.0,
) -> list[Clip]:
    """n annotated single-point clips with octant-weighted targets.

    Per-clip phase times and alignment errors jitter around human-scale
    defaults (the retraction is drawn no faster than the rise, so each clip's
    top hand speed is the rise's analytic minimum-jerk peak). Deterministic
    under seed.
    """
    if n < 1:
        raise ValueError("corpus size must be >= 1")
    weights = DEFAULT_OCTANT_WEIGHTS if octant_weights is None else np.asarray(octant_weights, float)
    if weights.shape != (8,) or np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError("octant_weights must be 8 non-negative numbers, not all zero")
    skel = skeleton or default_skeleton()
    rng = np.random.default_rng(seed)
    prob = weights / weights.sum()
    clips = []
    for i in range(n):
        octant = OCTANT_ORDER[int(rng.choice(8, p=prob))]
        rise = float(np.clip(rng.normal(0.71, 0.08), 0.5, 1.0))
        hold = float(np.clip(rng.normal(1.0, 0.15), 0.6, 1.4))
        retract = rise * float(rng.uniform(1.0, 1.15))
        align = (
            float(np.clip(rng.normal(20.0, 5.0), 5.0, 35.0))
            if alignment_error is None
            else alignment_error
        )
        target, hand = sample_octant_target(rng, octant, skel, align)
        params = SynthParams(
            target=target,
            hand=hand,
            rise_time=rise,
            hold_time=hold,
            retract_time=retract,
            alignment_error=align,
            noise_amplitude=noise_amplitude,
            seed=int(rng.integers(2**31)),
            fps=fps,
        )
        clips.append(generate_pointing_clip(skel, params, source=f"synth-{i:03d}"))
    return clips
