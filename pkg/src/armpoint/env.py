"""Fixed-base articulated-arm environment with PD joint control.

The simulated character is the synth skeleton with one actuated arm:
three shoulder DoFs (intrinsic x-y-z angles) plus a hinge elbow. Joint
dynamics are decoupled second-order systems (per-DoF inertia from cylinder
approximations of the limb segments) integrated with semi-implicit Euler;
there is no gravity, so zero torque leaves the arm at rest.

Episodes are driven by a phase clock over a reference motion clip. Each
control step advances the phase, applies PD torques toward the action's
target angles, and scores the new state with the imitation and pointing
reward channels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geom, synth
from .errors import (
    DimensionMismatch,
    SkeletonMismatch,
    SteppedAfterDone,
    TargetOutOfRange,
)
from .geom import Hand, Skeleton
from .mocap import Clip
from .reward import MAX_POINTING_REWARD, RewardConfig

MASS_UPPER_ARM = 2.1  # kg, cylinder approximation
MASS_FOREARM = 1.7  # kg, forearm plus hand

N_DOF = 4  # shoulder x, y, z, elbow bend


@dataclass(frozen=True)
class EnvConfig:
    """Environment construction parameters.

    ``kp``/``kd`` default to 60*I per radian with critical damping; they can
    be overridden per joint or scaled wholesale with ``kp_scale`` (damping is
    recomputed to stay critical).
    """

    reference_clips: tuple[Clip, ...]
    skeleton: Skeleton | None = None
    arm: Hand = Hand.RIGHT
    control_rate: float = 30.0
    substeps: int = 4
    kp_scale: float = 1.0
    kp: np.ndarray | None = None
    kd: np.ndarray | None = None
    joint_limits: np.ndarray | None = None  # (4, 2) radians
    torque_limits: np.ndarray | None = None  # (4,) N*m
    reward: RewardConfig = field(default_factory=RewardConfig)
    horizon: int | None = None
    front_only: bool = True
    target_shell: tuple[float, float] = synth.TARGET_SHELL

    def __post_init__(self):
        if not self.reference_clips:
            raise ValueError("at least one reference clip is required")
        if self.control_rate <= 0:
            raise ValueError("control_rate must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.kp_scale <= 0:
            raise ValueError("kp_scale must be positive")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        skel = self.skeleton or synth.default_skeleton()
        object.__setattr__(self, "skeleton", skel)
        if not skel.has_arm(self.arm):
            raise ValueError(f"skeleton has no {self.arm.value} arm")
        for clip in self.reference_clips:
            if not geom.skeletons_equal(clip.skeleton, skel):
                raise SkeletonMismatch(
                    f"reference clip {clip.source!r} uses a different skeleton"
                )


def default_inertia(skel: Skeleton, arm: Hand) -> np.ndarray:
    """Per-DoF inertia (kg m^2): the shoulder DoFs swing the whole extended
    arm, the elbow only the forearm segment."""
    upper, fore = synth.arm_lengths(skel, arm)
    i_shoulder = (
        MASS_UPPER_ARM * upper**2 / 3.0
        + MASS_FOREARM * ((upper + fore / 2.0) ** 2 + fore**2 / 12.0)
    )
    i_elbow = MASS_FOREARM * fore**2 / 3.0
    return np.array([i_shoulder, i_shoulder, i_shoulder, i_elbow])


DEFAULT_JOINT_LIMITS = np.array(
    [
        [-2.0 * math.pi, 2.0 * math.pi],
        [-2.0 * math.pi, 2.0 * math.pi],
        [-2.0 * math.pi, 2.0 * math.pi],
        [-2.9, 2.9],
    ]
)


@dataclass
class Trajectory:
    """One episode of logged steps. ``observations[t]`` is the observation
    the action at t was computed from; ``final_observation`` closes the loop."""

    observations: np.ndarray  # (T, obs_dim)
    actions: np.ndarray  # (T, 4)
    log_probs: np.ndarray  # (T,)
    rewards: np.ndarray  # (T,)
    dones: np.ndarray  # (T,) bool
    terms: list[dict]
    final_observation: np.ndarray
    target: np.ndarray
    clip_index: int

    def __len__(self) -> int:
        return self.actions.shape[0]


@dataclass(frozen=True)
class _ReferenceTable:
    """Reference state resampled at control steps 0..total."""

    total_steps: int
    angles: np.ndarray  # (total+1, 4)
    velocities: np.ndarray  # (total+1, 4)
    shoulder_quats: np.ndarray  # (total+1, 4)
    elbow_quats: np.ndarray  # (total+1, 4)
    elbow_pos: np.ndarray  # (total+1, 3)
    hand_pos: np.ndarray  # (total+1, 3)
    com: np.ndarray  # (total+1, 3)
    hot: tuple = ()  # per-step (velocity, shoulder quat, elbow quat, hand, com) tuples


def reference_joint_angles(clip: Clip, arm: Hand) -> np.ndarray:
    """Per-frame [shoulder x, y, z, elbow] angles of one arm, unwrapped."""
    sh = clip.skeleton.shoulder(arm)
    el = clip.skeleton.elbow(arm)
    F = clip.n_frames
    angles = np.empty((F, N_DOF))
    for f in range(F):
        angles[f, :3] = geom.euler_xyz_from_quat(clip.rotations[f, sh])
        q = clip.rotations[f, el]
        angles[f, 3] = 2.0 * math.atan2(q[1], q[0])
    return np.unwrap(angles, axis=0)


# --- small scalar quaternion helpers for the hot loop -----------------------


def _q_from_euler_xyz(ax, ay, az):
    cx, sx = math.cos(ax / 2), math.sin(ax / 2)
    cy, sy = math.cos(ay / 2), math.sin(ay / 2)
    cz, sz = math.cos(az / 2), math.sin(az / 2)
    # qx * qy
    w, x, y, z = cx * cy, sx * cy, cx * sy, sx * sy
    # (qx*qy) * qz
    return (
        w * cz - z * sz,
        x * cz + y * sz,
        y * cz - x * sz,
        w * sz + z * cz,
    )


def _q_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _q_rot(q, v):
    w, x, y, z = q
    vx, vy, vz = v
    cx = y * vz - z * vy
    cy = z * vx - x * vz
    cz = x * vy - y * vx
    return (
        vx + 2.0 * (w * cx + y * cz - z * cy),
        vy + 2.0 * (w * cy + z * cx - x * cz),
        vz + 2.0 * (w * cz + x * cy - y * cx),
    )


def _q_geodesic(a, b):
    d = abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
    return 2.0 * math.acos(min(1.0, d))


class PDArmEnv:
    """Single-instance, internally mutable environment. Instances do not
    share state, so independent instances may run on separate threads."""

    def __init__(self, config: EnvConfig):
        self.config = config
        skel = config.skeleton
        self.skeleton = skel
        self.arm = config.arm
        self._sh_idx = skel.shoulder(self.arm)
        self._el_idx = skel.elbow(self.arm)
        self._hand_idx = skel.hand(self.arm)
        self.upper, self.fore = synth.arm_lengths(skel, self.arm)
        self.reach = self.upper + self.fore

        idle = geom.forward_kinematics(skel, geom.identity_pose(skel))
        self.shoulder_pos = idle[self._sh_idx].copy()
        self._shoulder_t = tuple(self.shoulder_pos)
        moving = (self._el_idx, self._hand_idx)
        self._static_sum = tuple(
            idle[[j for j in range(skel.n_joints) if j not in moving]].sum(axis=0)
        )
        self._offset_elbow = tuple(skel.offsets[self._el_idx])
        self._offset_hand = tuple(skel.offsets[self._hand_idx])
        self._n_joints = skel.n_joints

        self.inertia = default_inertia(skel, self.arm)
        kp = config.kp if config.kp is not None else 60.0 * self.inertia * config.kp_scale
        self.kp = np.asarray(kp, dtype=np.float64).reshape(N_DOF)
        kd = config.kd if config.kd is not None else 2.0 * np.sqrt(self.kp * self.inertia)
        self.kd = np.asarray(kd, dtype=np.float64).reshape(N_DOF)
        if np.any(self.kp <= 0) or np.any(self.kd <= 0):
            raise ValueError("PD gains must be positive")
        limits = config.joint_limits if config.joint_limits is not None else DEFAULT_JOINT_LIMITS
        self.joint_limits = np.asarray(limits, dtype=np.float64).reshape(N_DOF, 2)
        torque = config.torque_limits if config.torque_limits is not None else np.full(N_DOF, 1000.0)
        self.torque_limits = np.asarray(torque, dtype=np.float64).reshape(N_DOF)

        # scalar mirrors for the integration loop
        self._kp_t = tuple(self.kp)
        self._kd_t = tuple(self.kd)
        self._inv_inertia_t = tuple(1.0 / self.inertia)
        self._lo_t = tuple(self.joint_limits[:, 0])
        self._hi_t = tuple(self.joint_limits[:, 1])
        self._tl_t = tuple(self.torque_limits)

        self.control_dt = 1.0 / config.control_rate
        self.sim_dt = self.control_dt / config.substeps

        self._tables: dict[int, _ReferenceTable] = {}
        self._rng = np.random.default_rng(0)

        # episode state
        self.q = np.zeros(N_DOF)
        self.qd = np.zeros(N_DOF)
        self._q_t = (0.0, 0.0, 0.0, 0.0)
        self._qd_t = (0.0, 0.0, 0.0, 0.0)
        self.steps = 0
        self.done = True
        self.target = np.zeros(3)
        self._target_t = (0.0, 0.0, 0.0)
        self.clip_index = 0

    # -- dimensions ---------------------------------------------------------

    @property
    def obs_dim(self) -> int:
        return 2 * N_DOF + 1 + 9

    @property
    def act_dim(self) -> int:
        return N_DOF

    # -- reference preparation ----------------------------------------------

    def _table(self, clip_index: int) -> _ReferenceTable:
        table = self._tables.get(clip_index)
        if table is not None:
            return table
        clip = self.config.reference_clips[clip_index]
        frames = reference_joint_angles(clip, self.arm)
        total = int(math.ceil(clip.duration * self.config.control_rate))
        ticks = np.arange(total + 1)
        frame_pos = np.clip(ticks * (clip.fps / self.config.control_rate), 0, clip.n_frames - 1)
        lo = np.floor(frame_pos).astype(int)
        hi = np.minimum(lo + 1, clip.n_frames - 1)
        frac = (frame_pos - lo)[:, None]
        angles = frames[lo] * (1.0 - frac) + frames[hi] * frac
        velocities = np.empty_like(angles)
        velocities[:-1] = np.diff(angles, axis=0) / self.control_dt
        velocities[-1] = velocities[-2]

        n = total + 1
        shoulder_quats = np.empty((n, 4))
        elbow_quats = np.empty((n, 4))
        elbow_pos = np.empty((n, 3))
        hand_pos = np.empty((n, 3))
        com = np.empty((n, 3))
        for k in range(n):
            state = self._arm_state(tuple(angles[k]))
            shoulder_quats[k], elbow_quats[k] = state[0], state[1]
            elbow_pos[k], hand_pos[k], com[k] = state[2], state[3], state[4]
        hot = tuple(
            (
                tuple(velocities[k]),
                tuple(shoulder_quats[k]),
                tuple(elbow_quats[k]),
                tuple(hand_pos[k]),
                tuple(com[k]),
            )
            for k in range(n)
        )
        table = _ReferenceTable(
            total_steps=total,
            angles=angles,
            velocities=velocities,
            shoulder_quats=shoulder_quats,
            elbow_quats=elbow_quats,
            elbow_pos=elbow_pos,
            hand_pos=hand_pos,
            com=com,
            hot=hot,
        )
        self._tables[clip_index] = table
        return table

    def _arm_state(self, q):
        """(shoulder quat, elbow quat, elbow pos, hand pos, com) for angles q,
        all as plain tuples (hot path)."""
        q_sh = _q_from_euler_xyz(q[0], q[1], q[2])
        half = 0.5 * q[3]
        q_el = (math.cos(half), math.sin(half), 0.0, 0.0)
        s = self._shoulder_t
        ex, ey, ez = _q_rot(q_sh, self._offset_elbow)
        elbow = (s[0] + ex, s[1] + ey, s[2] + ez)
        q_world = _q_mul(q_sh, q_el)
        hx, hy, hz = _q_rot(q_world, self._offset_hand)
        hand = (elbow[0] + hx, elbow[1] + hy, elbow[2] + hz)
        st = self._static_sum
        inv = 1.0 / self._n_joints
        com = (
            (st[0] + elbow[0] + hand[0]) * inv,
            (st[1] + elbow[1] + hand[1]) * inv,
            (st[2] + elbow[2] + hand[2]) * inv,
        )
        return q_sh, q_el, elbow, hand, com

    # -- target handling ------------------------------------------------------

    def sample_target(self, rng: np.random.Generator) -> np.ndarray:
        """Random target in the configured shell (front hemisphere by default),
        using the same feasibility rules as the corpus sampler."""
        octants = [
            o
            for o in synth.OCTANT_ORDER
            if (o.front or not self.config.front_only) and o.left == (self.arm is Hand.LEFT)
        ]
        octant = octants[int(rng.integers(len(octants)))]
        target, _ = synth.sample_octant_target(rng, octant, self.skeleton, 0.0)
        return target

    def _check_target(self, target: np.ndarray):
        dist = float(np.linalg.norm(target - self.shoulder_pos))
        if not 0.08 <= dist <= self.reach - 1e-6:
            raise TargetOutOfRange(
                f"target at {dist:.3f} m from the shoulder; usable range is "
                f"[0.08, {self.reach:.3f}) m"
            )

    # -- episode API ----------------------------------------------------------

    def reset(
        self,
        target: np.ndarray | None = None,
        clip_index: int | None = None,
        seed: int | None = None,
        phase: float | None = None,
    ) -> np.ndarray:
        """Start an episode at the idle pose (or, with ``phase``, at the
        reference state for that phase fraction, for reference-state inits)."""
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        if clip_index is None:
            clip_index = int(self._rng.integers(len(self.config.reference_clips)))
        if not 0 <= clip_index < len(self.config.reference_clips):
            raise ValueError(f"clip index {clip_index} out of range")
        if target is None:
            target = self.sample_target(self._rng)
        target = np.asarray(target, dtype=np.float64).reshape(3)
        self._check_target(target)

        self.clip_index = clip_index
        self.target = target
        self._target_t = tuple(target)
        self.q = np.zeros(N_DOF)
        self.qd = np.zeros(N_DOF)
        self.steps = 0
        if phase is not None:
            if not 0.0 <= phase < 1.0:
                raise ValueError("phase must be in [0, 1)")
            table = self._table(clip_index)
            self.steps = int(phase * table.total_steps)
            self.q = table.angles[self.steps].copy()
            self.qd = table.velocities[self.steps].copy()
        self._q_t = tuple(self.q)
        self._qd_t = tuple(self.qd)
        self.done = False
        self._episode_steps = self._episode_length(clip_index)
        return self._observe()

    def _episode_length(self, clip_index: int) -> int:
        total = self._table(clip_index).total_steps
        if self.config.horizon is not None:
            return min(total, self.config.horizon)
        return total

    @property
    def phase(self) -> float:
        total = self._table(self.clip_index).total_steps
        return min(1.0, self.steps / total)

    def _observe(self) -> np.ndarray:
        obs = np.empty(self.obs_dim)
        obs[0:4] = self.q
        obs[4:8] = self.qd
        obs[8] = self.phase
        sx, sy, sz = self._shoulder_t
        _, _, elbow, hand, _ = self._arm_state(self._q_t)
        obs[9:12] = self.target - self.shoulder_pos
        obs[12] = hand[0] - sx
        obs[13] = hand[1] - sy
        obs[14] = hand[2] - sz
        obs[15] = elbow[0] - sx
        obs[16] = elbow[1] - sy
        obs[17] = elbow[2] - sz
        return obs

    def step(self, action) -> tuple[np.ndarray, float, dict, bool]:
        if self.done:
            raise SteppedAfterDone("call reset() before stepping again")
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape[0] != N_DOF:
            raise DimensionMismatch(f"action needs {N_DOF} entries, got {action.shape[0]}")

        kp, kd = self._kp_t, self._kd_t
        lo, hi, tl = self._lo_t, self._hi_t, self._tl_t
        inv_i = self._inv_inertia_t
        dt = self.sim_dt
        a = [min(max(float(action[j]), lo[j]), hi[j]) for j in range(N_DOF)]
        q = list(self._q_t)
        qd = list(self._qd_t)
        for _ in range(self.config.substeps):
            for j in range(N_DOF):
                tau = kp[j] * (a[j] - q[j]) - kd[j] * qd[j]
                if tau > tl[j]:
                    tau = tl[j]
                elif tau < -tl[j]:
                    tau = -tl[j]
                v = qd[j] + tau * inv_i[j] * dt
                p = q[j] + v * dt
                if p < lo[j]:
                    p, v = lo[j], 0.0
                elif p > hi[j]:
                    p, v = hi[j], 0.0
                q[j] = p
                qd[j] = v
        self._q_t = tuple(q)
        self._qd_t = tuple(qd)
        self.q = np.array(q)
        self.qd = np.array(qd)

        self.steps += 1
        table = self._table(self.clip_index)
        k = min(self.steps, table.total_steps)
        terms = self._score(table, k)
        self.done = self.steps >= self._episode_steps
        return self._observe(), terms["reward"], terms, self.done

    def _score(self, table: _ReferenceTable, k: int) -> dict:
        cfg = self.config.reward
        q_sh, q_el, elbow, hand, com = self._arm_state(self._q_t)
        ref_vel, ref_shq, ref_elq, ref_hand, ref_com = table.hot[k]
        geo_sh = _q_geodesic(q_sh, ref_shq)
        geo_el = _q_geodesic(q_el, ref_elq)
        pose_err = geo_sh * geo_sh + geo_el * geo_el
        qd = self._qd_t
        vel_err = sum((qd[j] - ref_vel[j]) ** 2 for j in range(N_DOF))
        ee_err = (
            (hand[0] - ref_hand[0]) ** 2
            + (hand[1] - ref_hand[1]) ** 2
            + (hand[2] - ref_hand[2]) ** 2
        )
        com_err = (
            (com[0] - ref_com[0]) ** 2
            + (com[1] - ref_com[1]) ** 2
            + (com[2] - ref_com[2]) ** 2
        )

        r_pose = math.exp(-cfg.k_pose * pose_err)
        r_vel = math.exp(-cfg.k_velocity * vel_err)
        r_ee = math.exp(-cfg.k_end_effector * ee_err)
        r_com = math.exp(-cfg.k_com * com_err)
        r_imitation = (
            cfg.w_pose * r_pose
            + cfg.w_velocity * r_vel
            + cfg.w_end_effector * r_ee
            + cfg.w_com * r_com
        )

        # pointing precision, scalar form of reward.pointing_precision
        tx, ty, tz = self._target_t
        fx = hand[0] - elbow[0]
        fy = hand[1] - elbow[1]
        fz = hand[2] - elbow[2]
        gx = tx - hand[0]
        gy = ty - hand[1]
        gz = tz - hand[2]
        if gx * gx + gy * gy + gz * gz <= 1e-18:  # hand exactly on the target
            theta, r_task = 1.0, MAX_POINTING_REWARD
        else:
            cx = gy * fz - gz * fy
            cy = gz * fx - gx * fz
            cz = gx * fy - gy * fx
            angle = math.atan2(
                math.sqrt(cx * cx + cy * cy + cz * cz), gx * fx + gy * fy + gz * fz
            )
            theta = 1.0 - angle / math.pi
            r_task = (math.exp(theta) - 1.0) / math.e
        return {
            "phase": self.phase,
            "r_pose": r_pose,
            "r_velocity": r_vel,
            "r_end_effector": r_ee,
            "r_com": r_com,
            "r_imitation": r_imitation,
            "r_task": r_task,
            "theta_hat": theta,
            "reward": cfg.w_imitation * r_imitation + cfg.w_task * r_task,
        }

    def reference_state(self, step: int):
        """Reference (pose, velocity) at a control step, in full-skeleton form
        for offline reward recomputation."""
        table = self._table(self.clip_index)
        k = min(step, table.total_steps)
        return self._full_pose(table.angles[k]), self._joint_velocity(table.velocities[k])

    def _full_pose(self, q) -> geom.Pose:
        rots = np.zeros((self._n_joints, 4))
        rots[:, 0] = 1.0
        q_sh = _q_from_euler_xyz(q[0], q[1], q[2])
        half = 0.5 * q[3]
        rots[self._sh_idx] = q_sh
        rots[self._el_idx] = (math.cos(half), math.sin(half), 0.0, 0.0)
        return geom.Pose(self.skeleton.offsets[self.skeleton.root_index], rots)

    def _joint_velocity(self, qd) -> np.ndarray:
        vel = np.zeros((self._n_joints, 3))
        vel[self._sh_idx] = qd[:3]
        vel[self._el_idx, 0] = qd[3]
        return vel

    def state_pose(self) -> geom.Pose:
        return self._full_pose(self.q)

    def state_velocity(self) -> np.ndarray:
        return self._joint_velocity(self.qd)

    # -- rollouts -------------------------------------------------------------

    def rollout(
        self,
        policy,
        n_episodes: int,
        seed: int = 0,
        stochastic: bool = False,
        targets=None,
        clip_indices=None,
    ) -> list[Trajectory]:
        """Collect complete episodes. Deterministic given the seed and a
        deterministic policy; per-episode targets/clips may be pinned."""
        if getattr(policy, "obs_dim", self.obs_dim) != self.obs_dim:
            raise DimensionMismatch(
                f"policy expects obs dim {policy.obs_dim}, env provides {self.obs_dim}"
            )
        if getattr(policy, "act_dim", self.act_dim) != self.act_dim:
            raise DimensionMismatch(
                f"policy produces act dim {policy.act_dim}, env needs {self.act_dim}"
            )
        rng = np.random.default_rng(seed)
        out = []
        for ep in range(n_episodes):
            target = None if targets is None else targets[ep % len(targets)]
            clip_index = None if clip_indices is None else clip_indices[ep % len(clip_indices)]
            obs = self.reset(
                target=target, clip_index=clip_index, seed=int(rng.integers(2**31))
            )
            observations, actions, log_probs, rewards, dones, terms = [], [], [], [], [], []
            done = False
            while not done:
                if stochastic:
                    action, logp = policy.act(obs, rng)
                else:
                    action, logp = policy.act_deterministic(obs), 0.0
                observations.append(obs)
                next_obs, r, step_terms, done = self.step(action)
                actions.append(np.asarray(action, dtype=np.float64))
                log_probs.append(logp)
                rewards.append(r)
                dones.append(done)
                terms.append(step_terms)
                obs = next_obs
            out.append(
                Trajectory(
                    observations=np.asarray(observations),
                    actions=np.asarray(actions),
                    log_probs=np.asarray(log_probs),
                    rewards=np.asarray(rewards),
                    dones=np.asarray(dones, dtype=bool),
                    terms=terms,
                    final_observation=obs,
                    target=self.target.copy(),
                    clip_index=self.clip_index,
                )
            )
        return out


def write_trajectory_jsonl(trajectory: Trajectory, path) -> None:
    """One step per line: phase, joint state, action, and the reward terms."""
    with open(path, "w") as fh:
        for t in range(len(trajectory)):
            obs = trajectory.observations[t]
            row = {
                "phase": trajectory.terms[t]["phase"],
                "q": [float(v) for v in obs[0:4]],
                "qd": [float(v) for v in obs[4:8]],
                "action": [float(v) for v in trajectory.actions[t]],
                "terms": {key: float(val) for key, val in trajectory.terms[t].items()},
            }
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def read_trajectory_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


class ScriptedPointingPolicy:
    """Analytic expert: answers every observation with the hold-pose joint
    angles aimed exactly at the episode target. PD control does the rest."""

    def __init__(self, config: EnvConfig):
        self.skeleton = config.skeleton
        self.arm = config.arm
        idle = geom.forward_kinematics(self.skeleton, geom.identity_pose(self.skeleton))
        self.shoulder_pos = idle[self.skeleton.shoulder(self.arm)]
        self.obs_dim = 2 * N_DOF + 1 + 9
        self.act_dim = N_DOF
        self._cache_key = None
        self._cache_action = None

    def act_deterministic(self, obs) -> np.ndarray:
        target = np.asarray(obs[9:12]) + self.shoulder_pos
        key = tuple(np.round(target, 12))
        if key != self._cache_key:
            self._cache_action = synth.hold_arm_angles(self.skeleton, self.arm, target, 0.0)
            self._cache_key = key
        return self._cache_action

    def act(self, obs, rng) -> tuple[np.ndarray, float]:
        return self.act_deterministic(obs), 0.0
