"""Vector, quaternion, and joint-chain math used by every other module.

Conventions:
    * World frame: Y is up, the actor faces +Z, +X points to the actor's left.
      All lengths are meters.
    * A position ("Vec3") is a float64 array of shape (3,).
    * A rotation is a unit quaternion stored as a float64 array in
      (w, x, y, z) order, canonicalized to w >= 0 when persisted. Most
      quaternion helpers broadcast over stacked arrays of shape (..., 4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateVector, SeriesTooShort

LENGTH_EPS = 1e-9

Vec3 = np.ndarray  # shape (3,)
Quat = np.ndarray  # shape (4,), (w, x, y, z)


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=np.float64)


class Hand(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Hand":
        return Hand.RIGHT if self is Hand.LEFT else Hand.LEFT


# ---------------------------------------------------------------------------
# vectors


def angle_between(u: Vec3, v: Vec3) -> float:
    """Angle in [0, pi] between two nonzero vectors (symmetric, scale-free).

    Equivalent to arccos of the clamped normalized dot product, but computed
    via atan2(|u x v|, u.v) which stays well-conditioned at 0 and pi.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu <= LENGTH_EPS or nv <= LENGTH_EPS:
        raise DegenerateVector(
            f"cannot measure an angle against a near-zero vector (|u|={nu:.3g}, |v|={nv:.3g})"
        )
    u = u / nu
    v = v / nv
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


def normalized(v: Vec3) -> Vec3:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n <= LENGTH_EPS:
        raise DegenerateVector("cannot normalize a near-zero vector")
    return v / n


# ---------------------------------------------------------------------------
# quaternions


def quat_identity() -> Quat:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: Quat) -> Quat:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n <= LENGTH_EPS):
        raise DegenerateVector("cannot normalize a near-zero quaternion")
    return q / n


def quat_canonical(q: Quat) -> Quat:
    """Normalize and flip sign so w >= 0 (resolves the double cover)."""
    q = quat_normalize(q)
    return np.where(q[..., :1] < 0.0, -q, q)


def quat_conjugate(q: Quat) -> Quat:
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_mul(a: Quat, b: Quat) -> Quat:
    """Hamilton product a*b; broadcasts over leading dimensions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate vector(s) v by quaternion(s) q; broadcasts over leading dims."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u = q[..., 1:]
    w = q[..., :1]
    c = np.cross(u, v)
    return v + 2.0 * (w * c + np.cross(u, c))


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    axis = normalized(axis)
    half = 0.5 * angle
    s = math.sin(half)
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_geodesic(a: Quat, b: Quat) -> float:
    """Geodesic angle in [0, pi] between two unit quaternions.

    Double-cover aware: q and -q measure as identical rotations. Uses the
    relative quaternion's atan2 form, which is accurate near zero where the
    dot-product arccos loses half the significant digits.
    """
    rel = quat_mul(quat_conjugate(np.asarray(a, dtype=np.float64)), np.asarray(b, dtype=np.float64))
    vec = np.linalg.norm(rel[..., 1:], axis=-1)
    return 2.0 * np.arctan2(vec, np.abs(rel[..., 0]))


_AXIS_VECTORS = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


def quat_from_euler(angles, order: str = "xyz") -> Quat:
    """Compose intrinsic rotations in the given axis order (radians)."""
    if len(order) != len(angles):
        raise ValueError("axis order and angle count differ")
    q = quat_identity()
    for axis, angle in zip(order.lower(), angles):
        q = quat_mul(q, quat_from_axis_angle(_AXIS_VECTORS[axis], float(angle)))
    return q


def quat_to_mat3(q: Quat) -> np.ndarray:
    w, x, y, z = (float(c) for c in np.asarray(q, dtype=np.float64))
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def mat3_to_quat(m: np.ndarray) -> Quat:
    """Rotation matrix to unit quaternion (Shepperd's branching), w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_canonical(q)


def euler_xyz_from_quat(q: Quat) -> tuple[float, float, float]:
    """Extract intrinsic x-y-z angles such that quat_from_euler(angles, "xyz")
    reproduces the rotation (up to quaternion sign)."""
    m = quat_to_mat3(q)
    sy = float(np.clip(m[0, 2], -1.0, 1.0))
    if abs(sy) < 1.0 - 1e-9:
        ax = math.atan2(-m[1, 2], m[2, 2])
        ay = math.asin(sy)
        az = math.atan2(-m[0, 1], m[0, 0])
    else:
        # gimbal: pitch at +-pi/2, fold the z rotation into x
        ay = math.copysign(math.pi / 2.0, sy)
        ax = math.atan2(m[1, 0], m[1, 1])
        az = 0.0
    return ax, ay, az


# ---------------------------------------------------------------------------
# skeleton and poses


LANDMARK_KEYS = (
    "root",
    "left_shoulder",
    "left_elbow",
    "left_hand",
    "right_shoulder",
    "right_elbow",
    "right_hand",
)

_PART_ALIASES = (
    ("elbow", ("elbow", "forearm", "lowerarm")),
    ("hand", ("hand", "wrist")),
    ("shoulder", ("shoulder", "upperarm", "arm", "clavicle")),
)


def _side_of(lower: str) -> str | None:
    if "left" in lower:
        return "left"
    if "right" in lower:
        return "right"
    if lower.startswith(("l_", "l.", "l ")):
        return "left"
    if lower.startswith(("r_", "r.", "r ")):
        return "right"
    return None


def infer_landmarks(names, parents) -> dict[str, int]:
    """Guess designated joint indices from joint names.

    Side comes from a left/right token in the name; the part from common
    aliases (forearm counts as elbow, wrist as hand). Shortest matching
    name wins so e.g. "LeftHand" beats "LeftHandIndex1".
    """
    marks: dict[str, int] = {}
    for i, p in enumerate(parents):
        if p < 0:
            marks["root"] = i
            break
    claimed: set[int] = set()
    for part, aliases in _PART_ALIASES:
        for side in ("left", "right"):
            best = None
            for i, name in enumerate(names):
                if i in claimed:
                    continue
                lower = name.lower()
                if _side_of(lower) != side:
                    continue
                if any(a in lower for a in aliases):
                    if best is None or len(name) < len(names[best]):
                        best = i
            if best is not None:
                marks[f"{side}_{part}"] = best
                claimed.add(best)
    return marks


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Ordered joint list with fixed parent-frame offsets.

    Joints are topologically ordered (parent index < joint index, root has
    parent -1). ``landmarks`` maps the designated keys from LANDMARK_KEYS to
    joint indices; when omitted they are inferred from the joint names.
    """

    names: tuple[str, ...]
    parents: tuple[int, ...]
    offsets: np.ndarray  # (J, 3) meters, parent frame
    landmarks: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        names = tuple(self.names)
        parents = tuple(int(p) for p in self.parents)
        offsets = np.asarray(self.offsets, dtype=np.float64).reshape(len(names), 3)
        if len(parents) != len(names):
            raise ValueError("names and parents length mismatch")
        roots = [i for i, p in enumerate(parents) if p < 0]
        if len(roots) != 1:
            raise ValueError(f"skeleton must have exactly one root, found {len(roots)}")
        for i, p in enumerate(parents):
            if p >= i:
                raise ValueError(f"joint {i} has parent {p}; parents must precede children")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("offsets must be finite")
        marks = dict(self.landmarks) if self.landmarks else infer_landmarks(names, parents)
        marks.setdefault("root", roots[0])
        for key, idx in marks.items():
            if key not in LANDMARK_KEYS:
                raise ValueError(f"unknown landmark {key!r}")
            if not 0 <= idx < len(names):
                raise ValueError(f"landmark {key!r} index {idx} out of range")
        offsets.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "landmarks", marks)

    @property
    def n_joints(self) -> int:
        return len(self.names)

    @property
    def root_index(self) -> int:
        return self.landmarks["root"]

    def has_arm(self, hand: Hand) -> bool:
        side = hand.value
        return all(f"{side}_{part}" in self.landmarks for part in ("shoulder", "elbow", "hand"))

    def shoulder(self, hand: Hand) -> int:
        return self.landmarks[f"{hand.value}_shoulder"]

    def elbow(self, hand: Hand) -> int:
        return self.landmarks[f"{hand.value}_elbow"]

    def hand(self, hand: Hand) -> int:
        return self.landmarks[f"{hand.value}_hand"]


def skeletons_equal(a: Skeleton, b: Skeleton) -> bool:
    return (
        a.names == b.names
        and a.parents == b.parents
        and np.array_equal(a.offsets, b.offsets)
        and a.landmarks == b.landmarks
    )


@dataclass(frozen=True, eq=False)
class Pose:
    """Per-joint local rotations plus the root's world position."""

    root_position: np.ndarray  # (3,)
    rotations: np.ndarray  # (J, 4)

    def __post_init__(self):
        root = np.asarray(self.root_position, dtype=np.float64).reshape(3)
        rots = np.asarray(self.rotations, dtype=np.float64)
        if rots.ndim != 2 or rots.shape[1] != 4:
            raise ValueError("rotations must have shape (J, 4)")
        object.__setattr__(self, "root_position", root)
        object.__setattr__(self, "rotations", rots)

    @property
    def n_joints(self) -> int:
        return self.rotations.shape[0]


def identity_pose(skel: Skeleton, root_position: Vec3 | None = None) -> Pose:
    root = skel.offsets[skel.root_index] if root_position is None else root_position
    rots = np.zeros((skel.n_joints, 4))
    rots[:, 0] = 1.0
    return Pose(root, rots)


def forward_kinematics(skel: Skeleton, pose: Pose) -> np.ndarray:
    """World positions of every joint, shape (J, 3).

    The root sits at ``pose.root_position``; each child is its parent's
    position plus the parent's accumulated world rotation applied to the
    child's fixed offset.
    """
    if pose.n_joints != skel.n_joints:
        raise ValueError("pose joint count does not match skeleton")
    J = skel.n_joints
    pos = np.empty((J, 3))
    world = np.empty((J, 4))
    for j in range(J):
        p = skel.parents[j]
        if p < 0:
            pos[j] = pose.root_position
            world[j] = pose.rotations[j]
        else:
            pos[j] = pos[p] + quat_rotate(world[p], skel.offsets[j])
            world[j] = quat_mul(world[p], pose.rotations[j])
    return pos


def forward_kinematics_batch(
    skel: Skeleton, root_positions: np.ndarray, rotations: np.ndarray
) -> np.ndarray:
    """Vectorized FK over F frames: (F, 3) roots + (F, J, 4) rotations -> (F, J, 3)."""
    rotations = np.asarray(rotations, dtype=np.float64)
    root_positions = np.asarray(root_positions, dtype=np.float64)
    F, J = rotations.shape[0], rotations.shape[1]
    if J != skel.n_joints:
        raise ValueError("rotation joint count does not match skeleton")
    pos = np.empty((F, J, 3))
    world = np.empty((F, J, 4))
    for j in range(J):
        p = skel.parents[j]
        if p < 0:
            pos[:, j] = root_positions
            world[:, j] = rotations[:, j]
        else:
            pos[:, j] = pos[:, p] + quat_rotate(world[:, p], skel.offsets[j])
            world[:, j] = quat_mul(world[:, p], rotations[:, j])
    return pos


# ---------------------------------------------------------------------------
# numerical differentiation


def finite_difference(series, dt: float, order: int = 1) -> np.ndarray:
    """Repeated forward differences: order 1 is (s[t+1]-s[t])/dt, length n-1.

    Works along axis 0, so (N,) series and (N, D) stacked series both work.
    Each order shortens the series by one sample.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2, or 3, got {order}")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    arr = np.asarray(series, dtype=np.float64)
    if arr.shape[0] <= order:
        raise SeriesTooShort(f"need more than {order} samples, got {arr.shape[0]}")
    for _ in range(order):
        arr = np.diff(arr, axis=0) / dt
    return arr
