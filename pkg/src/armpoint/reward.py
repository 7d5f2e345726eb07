"""Reward channels: pointing-precision task reward, pose-imitation reward,
their weighted combination, and the adversarial discriminator reward map.

The imitation reward compares a simulated pose/velocity state against a
reference state as a product of exponentials over pose, velocity,
end-effector, and center-of-mass errors; all scale constants and weights
live in RewardConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geom
from .errors import DegenerateVector, SkeletonMismatch
from .geom import Hand, Pose, Skeleton

MAX_POINTING_REWARD = (math.e - 1.0) / math.e  # value at perfect alignment


@dataclass(frozen=True)
class ArmFrame:
    """Elbow, hand, and target world positions for one evaluation instant."""

    elbow: np.ndarray
    hand: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        for name in ("elbow", "hand", "target"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(3)
            )


@dataclass(frozen=True)
class RewardConfig:
    """Weights and exponential scales for the combined reward.

    ``w_imitation + w_task`` and the four imitation-term weights must each
    sum to 1.
    """

    w_imitation: float = 0.7
    w_task: float = 0.3
    w_pose: float = 0.65
    w_velocity: float = 0.1
    w_end_effector: float = 0.15
    w_com: float = 0.1
    k_pose: float = 2.0
    k_velocity: float = 0.1
    k_end_effector: float = 40.0
    k_com: float = 10.0

    def __post_init__(self):
        weights = (
            self.w_imitation,
            self.w_task,
            self.w_pose,
            self.w_velocity,
            self.w_end_effector,
            self.w_com,
        )
        if any(w < 0 for w in weights):
            raise ValueError("reward weights must be non-negative")
        if abs(self.w_imitation + self.w_task - 1.0) > 1e-9:
            raise ValueError("w_imitation + w_task must equal 1")
        terms = self.w_pose + self.w_velocity + self.w_end_effector + self.w_com
        if abs(terms - 1.0) > 1e-9:
            raise ValueError("imitation term weights must sum to 1")
        if min(self.k_pose, self.k_velocity, self.k_end_effector, self.k_com) <= 0:
            raise ValueError("exponential scales must be positive")


@dataclass(frozen=True)
class ImitationTerms:
    """The four imitation factors, each in (0, 1]."""

    pose: float
    velocity: float
    end_effector: float
    com: float


def pointing_precision(frame: ArmFrame) -> float:
    """1 - angle(hand->target, elbow->hand)/pi, in [0, 1].

    1 means the forearm lies exactly on the ray toward the target; 0 means
    it points straight away from it. Raises DegenerateVector when the target
    coincides with the hand or the forearm has no length.
    """
    forearm = frame.hand - frame.elbow
    to_target = frame.target - frame.hand
    return 1.0 - geom.angle_between(to_target, forearm) / math.pi


def reward_from_precision(theta_hat: float) -> float:
    """(exp(theta_hat) - 1)/e: strictly increasing, 0 at 0, (e-1)/e at 1."""
    return (math.exp(theta_hat) - 1.0) / math.e


def pointing_reward(frame: ArmFrame) -> float:
    return reward_from_precision(pointing_precision(frame))


def imitation_reward(
    skel: Skeleton,
    pose: Pose,
    velocity: np.ndarray,
    ref_pose: Pose,
    ref_velocity: np.ndarray,
    config: RewardConfig | None = None,
) -> tuple[ImitationTerms, float]:
    """Similarity of a simulated state to a reference state.

    ``velocity`` arrays hold per-joint angular velocities, shape (J, 3), in
    any convention as long as both states use the same one. The pose term
    uses the squared geodesic angle between matching local quaternions; the
    end-effector term squared world distances over the hand joints; the
    center-of-mass term the unit-mass mean of all joint positions.
    """
    config = config or RewardConfig()
    if pose.n_joints != skel.n_joints or ref_pose.n_joints != skel.n_joints:
        raise SkeletonMismatch("pose joint count does not match skeleton")
    velocity = np.asarray(velocity, dtype=np.float64)
    ref_velocity = np.asarray(ref_velocity, dtype=np.float64)
    if velocity.shape != (skel.n_joints, 3) or ref_velocity.shape != (skel.n_joints, 3):
        raise SkeletonMismatch("velocities must have shape (J, 3)")

    geo = geom.quat_geodesic(pose.rotations, ref_pose.rotations)
    pose_err = float(np.sum(geo * geo))
    vel_err = float(np.sum((velocity - ref_velocity) ** 2))

    positions = geom.forward_kinematics(skel, pose)
    ref_positions = geom.forward_kinematics(skel, ref_pose)
    ee_err = 0.0
    for hand in (Hand.LEFT, Hand.RIGHT):
        if skel.has_arm(hand):
            idx = skel.hand(hand)
            ee_err += float(np.sum((positions[idx] - ref_positions[idx]) ** 2))
    com_err = float(np.sum((positions.mean(axis=0) - ref_positions.mean(axis=0)) ** 2))

    terms = ImitationTerms(
        pose=math.exp(-config.k_pose * pose_err),
        velocity=math.exp(-config.k_velocity * vel_err),
        end_effector=math.exp(-config.k_end_effector * ee_err),
        com=math.exp(-config.k_com * com_err),
    )
    total = (
        config.w_pose * terms.pose
        + config.w_velocity * terms.velocity
        + config.w_end_effector * terms.end_effector
        + config.w_com * terms.com
    )
    return terms, total


def combined_reward(r_imitation: float, r_task: float, config: RewardConfig | None = None) -> float:
    """w_imitation * r_imitation + w_task * r_task."""
    config = config or RewardConfig()
    if not (math.isfinite(r_imitation) and math.isfinite(r_task)):
        raise ValueError("reward channels must be finite")
    return config.w_imitation * r_imitation + config.w_task * r_task


def amp_reward(score: float) -> float:
    """Least-squares discriminator score (+1 real, -1 fake) to a [0, 1] reward."""
    if not math.isfinite(score):
        raise ValueError("discriminator score must be finite")
    return max(0.0, 1.0 - 0.25 * (score - 1.0) ** 2)
