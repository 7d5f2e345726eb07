"""Motion clip ingestion and pointing-movement analysis.

Two on-disk formats are supported:

* BVH text files (HIERARCHY/MOTION grammar). BVH carries no targets.
* The native clip format: a single JSON document with fields ``fps``,
  ``units`` ("m" or "mm"), ``skeleton`` (joints with ``name``, ``parent``,
  ``offset``), ``frames`` (root position plus per-joint quaternions),
  ``targets`` (labeled positions), and optional ``annotations``
  (ground-truth segments). This format is the interchange contract between
  the synthesizer, the environment, and the evaluator.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from . import geom
from .errors import (
    DegenerateVector,
    NoMovementFound,
    ParseError,
    SchemaError,
    UnsupportedChannel,
)
from .geom import Hand, Pose, Skeleton

# ---------------------------------------------------------------------------
# core types


@dataclass(frozen=True)
class Target:
    label: str
    position: np.ndarray  # (3,) world, meters

    def __post_init__(self):
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=np.float64).reshape(3)
        )


@dataclass(frozen=True)
class SegmentMark:
    """Ground-truth segment boundaries as stored in clip annotations."""

    hand: Hand
    onset: int
    peak_velocity: int
    hold_start: int
    offset: int
    target: int | None = None

    def __post_init__(self):
        if not self.onset < self.peak_velocity <= self.hold_start < self.offset:
            raise ValueError(
                f"segment frames out of order: onset={self.onset} peak={self.peak_velocity} "
                f"hold={self.hold_start} offset={self.offset}"
            )


@dataclass(eq=False)
class Clip:
    """A skeleton plus per-frame joint rotations and annotated targets.

    Frames are stored packed: ``root_positions`` (F, 3) and ``rotations``
    (F, J, 4). World joint positions are derived lazily via forward
    kinematics and cached.
    """

    skeleton: Skeleton
    fps: float
    root_positions: np.ndarray
    rotations: np.ndarray
    targets: tuple[Target, ...] = ()
    source: str = "clip"
    annotations: tuple[SegmentMark, ...] = ()

    def __post_init__(self):
        self.root_positions = np.asarray(self.root_positions, dtype=np.float64)
        self.rotations = np.asarray(self.rotations, dtype=np.float64)
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.rotations.ndim != 3 or self.rotations.shape[2] != 4:
            raise ValueError("rotations must have shape (F, J, 4)")
        if self.rotations.shape[0] < 2:
            raise ValueError("a clip needs at least 2 frames")
        if self.root_positions.shape != (self.rotations.shape[0], 3):
            raise ValueError("root_positions must have shape (F, 3)")
        if self.rotations.shape[1] != self.skeleton.n_joints:
            raise ValueError("rotation joint count does not match skeleton")
        self.targets = tuple(self.targets)
        self.annotations = tuple(self.annotations)
        for mark in self.annotations:
            if mark.offset > self.n_frames:
                raise ValueError("annotation offset past clip end")

    @property
    def n_frames(self) -> int:
        return self.rotations.shape[0]

    @property
    def duration(self) -> float:
        return self.n_frames / self.fps

    def pose(self, frame: int) -> Pose:
        return Pose(self.root_positions[frame], self.rotations[frame])

    @functools.cached_property
    def joint_positions(self) -> np.ndarray:
        """World positions for all frames, shape (F, J, 3). Cached."""
        return geom.forward_kinematics_batch(self.skeleton, self.root_positions, self.rotations)


def truncate_clip(clip: Clip, end_frame: int) -> Clip:
    """First ``end_frame`` frames of a clip (annotations past the cut are
    dropped). Used e.g. to keep only the arm-raising stage of a movement."""
    end = min(int(end_frame), clip.n_frames)
    if end < 2:
        raise ValueError("truncated clip needs at least 2 frames")
    return Clip(
        skeleton=clip.skeleton,
        fps=clip.fps,
        root_positions=clip.root_positions[:end].copy(),
        rotations=clip.rotations[:end].copy(),
        targets=clip.targets,
        source=f"{clip.source}#0:{end}",
        annotations=tuple(m for m in clip.annotations if m.offset <= end),
    )


def clips_equal(a: Clip, b: Clip) -> bool:
    return (
        geom.skeletons_equal(a.skeleton, b.skeleton)
        and a.fps == b.fps
        and np.array_equal(a.root_positions, b.root_positions)
        and np.array_equal(a.rotations, b.rotations)
        and len(a.targets) == len(b.targets)
        and all(
            ta.label == tb.label and np.array_equal(ta.position, tb.position)
            for ta, tb in zip(a.targets, b.targets)
        )
        and a.source == b.source
        and a.annotations == b.annotations
    )


@dataclass(frozen=True)
class Segment:
    """One pointing movement: a half-open frame range with phase landmarks."""

    clip: Clip
    hand: Hand
    onset: int
    peak_velocity: int
    hold_start: int
    offset: int
    target_index: int | None = None

    def __post_init__(self):
        if not self.onset < self.peak_velocity <= self.hold_start < self.offset <= self.clip.n_frames:
            raise ValueError(
                f"segment frames out of order: onset={self.onset} peak={self.peak_velocity} "
                f"hold={self.hold_start} offset={self.offset} n={self.clip.n_frames}"
            )
        if not self.clip.skeleton.has_arm(self.hand):
            raise ValueError(f"clip skeleton has no {self.hand.value} arm")

    @property
    def mark(self) -> SegmentMark:
        return SegmentMark(
            hand=self.hand,
            onset=self.onset,
            peak_velocity=self.peak_velocity,
            hold_start=self.hold_start,
            offset=self.offset,
            target=self.target_index,
        )


@dataclass(frozen=True)
class KinematicStats:
    """Per-movement summary. Velocities are reported in mm/s."""

    duration: float
    rise_time: float
    peak_velocity: float
    mean_velocity: float

    def __post_init__(self):
        if min(self.duration, self.rise_time, self.peak_velocity, self.mean_velocity) <= 0:
            raise ValueError("kinematic stats must be positive")
        if self.rise_time > self.duration + 1e-9:
            raise ValueError("rise_time cannot exceed duration")
        if self.mean_velocity > self.peak_velocity + 1e-9:
            raise ValueError("mean velocity cannot exceed peak velocity")


@dataclass(frozen=True)
class Octant:
    """One of eight spatial cells around the body: front/back x left/right x top/bottom."""

    front: bool
    left: bool
    top: bool

    @property
    def label(self) -> str:
        return "-".join(
            (
                "Front" if self.front else "Back",
                "Top" if self.top else "Bottom",
                "Left" if self.left else "Right",
            )
        )


OCTANT_ORDER = (
    Octant(front=True, top=True, left=True),
    Octant(front=True, top=True, left=False),
    Octant(front=False, top=True, left=True),
    Octant(front=False, top=True, left=False),
    Octant(front=True, top=False, left=True),
    Octant(front=True, top=False, left=False),
    Octant(front=False, top=False, left=True),
    Octant(front=False, top=False, left=False),
)


@dataclass(frozen=True)
class BodyFrame:
    """Planes splitting space around the actor: midline (x), shoulder height (y), chest (z)."""

    origin: np.ndarray  # root world position
    shoulder_height: float

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))

    @classmethod
    def from_clip(cls, clip: Clip, frame: int = 0) -> "BodyFrame":
        positions = clip.joint_positions[frame]
        marks = clip.skeleton.landmarks
        heights = [
            positions[marks[k]][1]
            for k in ("left_shoulder", "right_shoulder")
            if k in marks
        ]
        if not heights:
            heights = [positions[clip.skeleton.root_index][1]]
        return cls(origin=clip.root_positions[frame], shoulder_height=float(np.mean(heights)))


# ---------------------------------------------------------------------------
# BVH parsing

_POSITION_CHANNELS = ("Xposition", "Yposition", "Zposition")
_ROTATION_CHANNELS = ("Xrotation", "Yrotation", "Zrotation")


class _BvhReader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.i = 0

    @property
    def line_no(self) -> int:
        return self.i  # self.i already advanced past the consumed line

    def next_tokens(self):
        while self.i < len(self.lines):
            line = self.lines[self.i]
            self.i += 1
            tokens = line.split()
            if tokens:
                return tokens
        return None

    def peek_tokens(self):
        save = self.i
        tokens = self.next_tokens()
        self.i = save
        return tokens


def parse_bvh(text: str, scale: float = 1.0, source: str = "bvh") -> Clip:
    """Parse BVH text into a Clip.

    ``scale`` converts file length units into meters (e.g. 0.01 for files
    authored in centimeters). Euler channels are converted to quaternions in
    the order each joint's CHANNELS line declares. Position channels are only
    representable on the root; elsewhere they raise UnsupportedChannel.
    """
    rd = _BvhReader(text)
    tok = rd.next_tokens()
    if tok is None or tok[0].upper() != "HIERARCHY":
        raise ParseError("expected HIERARCHY", rd.line_no)
    tok = rd.next_tokens()
    if tok is None or tok[0].upper() != "ROOT" or len(tok) < 2:
        raise ParseError("expected ROOT <name>", rd.line_no)

    names: list[str] = []
    parents: list[int] = []
    offsets: list[np.ndarray] = []
    channels: list[list[str]] = []

    def parse_joint(name: str, parent: int, is_end: bool):
        index = len(names)
        names.append(name)
        parents.append(parent)
        offsets.append(np.zeros(3))
        channels.append([])
        tok = rd.next_tokens()
        if tok is None or tok[0] != "{":
            raise ParseError(f"expected '{{' after joint {name!r}", rd.line_no)
        closed = False
        while True:
            tok = rd.next_tokens()
            if tok is None:
                raise ParseError(f"unbalanced braces: joint {name!r} never closed", rd.line_no)
            key = tok[0].upper()
            if key == "OFFSET":
                if len(tok) != 4:
                    raise ParseError("OFFSET needs exactly 3 values", rd.line_no)
                try:
                    offsets[index] = np.array([float(v) for v in tok[1:]]) * scale
                except ValueError:
                    raise ParseError("non-numeric OFFSET value", rd.line_no) from None
            elif key == "CHANNELS":
                if is_end:
                    raise ParseError("End Site cannot declare channels", rd.line_no)
                try:
                    n = int(tok[1])
                except (IndexError, ValueError):
                    raise ParseError("CHANNELS needs a count", rd.line_no) from None
                declared = tok[2:]
                if len(declared) != n:
                    raise ParseError(
                        f"CHANNELS declares {n} but lists {len(declared)}", rd.line_no
                    )
                for ch in declared:
                    if ch not in _POSITION_CHANNELS and ch not in _ROTATION_CHANNELS:
                        raise UnsupportedChannel(f"unsupported channel {ch!r}", rd.line_no)
                    if ch in _POSITION_CHANNELS and parent >= 0:
                        raise UnsupportedChannel(
                            "position channels are only supported on the root joint",
                            rd.line_no,
                        )
                channels[index] = list(declared)
            elif key == "JOINT":
                if len(tok) < 2:
                    raise ParseError("JOINT needs a name", rd.line_no)
                parse_joint(tok[1], index, is_end=False)
            elif key == "END" and len(tok) >= 2 and tok[1].upper() == "SITE":
                parse_joint(f"{name}End", index, is_end=True)
            elif key == "}":
                closed = True
                break
            else:
                raise ParseError(f"unexpected token {tok[0]!r} in joint block", rd.line_no)
        if not closed:
            raise ParseError("unbalanced braces", rd.line_no)

    parse_joint(tok[1], -1, is_end=False)

    tok = rd.next_tokens()
    if tok is None or tok[0].upper() != "MOTION":
        raise ParseError("expected MOTION after hierarchy", rd.line_no)
    tok = rd.next_tokens()
    if tok is None or tok[0].rstrip(":").upper() != "FRAMES":
        raise ParseError("expected 'Frames:' line", rd.line_no)
    try:
        n_frames = int(tok[-1])
    except ValueError:
        raise ParseError("non-numeric frame count", rd.line_no) from None
    tok = rd.next_tokens()
    if tok is None or tok[0].upper() != "FRAME" or len(tok) < 3:
        raise ParseError("expected 'Frame Time:' line", rd.line_no)
    try:
        frame_time = float(tok[-1])
    except ValueError:
        raise ParseError("non-numeric frame time", rd.line_no) from None
    if frame_time <= 0:
        raise ParseError("frame time must be positive", rd.line_no)

    arity = sum(len(ch) for ch in channels)
    J = len(names)
    root = parents.index(-1)
    root_positions = np.tile(offsets[root], (n_frames, 1))
    rotations = np.zeros((n_frames, J, 4))
    rotations[:, :, 0] = 1.0

    for f in range(n_frames):
        tok = rd.next_tokens()
        if tok is None:
            raise ParseError(
                f"MOTION declares {n_frames} frames but only {f} rows found", rd.line_no
            )
        if len(tok) != arity:
            raise ParseError(
                f"frame row has {len(tok)} values, expected {arity}", rd.line_no
            )
        try:
            row = [float(v) for v in tok]
        except ValueError:
            raise ParseError("non-numeric motion value", rd.line_no) from None
        cursor = 0
        for j in range(J):
            q = geom.quat_identity()
            for ch in channels[j]:
                value = row[cursor]
                cursor += 1
                axis = ch[0].lower()
                if ch in _POSITION_CHANNELS:
                    root_positions[f, "xyz".index(axis)] = offsets[root][
                        "xyz".index(axis)
                    ] + value * scale
                else:
                    q = geom.quat_mul(
                        q, geom.quat_from_axis_angle(geom._AXIS_VECTORS[axis], math.radians(value))
                    )
            rotations[f, j] = geom.quat_canonical(q)

    extra = rd.next_tokens()
    if extra is not None:
        raise ParseError(
            f"MOTION declares {n_frames} frames but extra data follows", rd.line_no
        )

    skeleton = Skeleton(names=tuple(names), parents=tuple(parents), offsets=np.array(offsets))
    return Clip(
        skeleton=skeleton,
        fps=1.0 / frame_time,
        root_positions=root_positions,
        rotations=rotations,
        source=source,
    )


# ---------------------------------------------------------------------------
# native clip JSON


def _require(doc: dict, key: str, kind, path: str = ""):
    name = f"{path}{key}"
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(name)
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(name, f"field {name!r} must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise SchemaError(name, f"field {name!r} has the wrong type")
    return value


def _vec(value, name: str) -> np.ndarray:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise SchemaError(name, f"field {name!r} must be a list of 3 numbers")
    vec = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise SchemaError(name, f"field {name!r} must be finite")
    return vec


def parse_clip_json(text: str) -> Clip:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("document", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("document", "top level must be an object")

    fps = _require(doc, "fps", float)
    if fps <= 0:
        raise SchemaError("fps", "fps must be positive")
    units = _require(doc, "units", str)
    if units not in ("m", "mm"):
        raise SchemaError("units", "units must be 'm' or 'mm'")
    scale = 0.001 if units == "mm" else 1.0

    skel_doc = _require(doc, "skeleton", dict)
    joints = _require(skel_doc, "joints", list, "skeleton.")
    if not joints:
        raise SchemaError("skeleton.joints", "skeleton needs at least one joint")
    names, parents, offsets = [], [], []
    for k, j in enumerate(joints):
        path = f"skeleton.joints[{k}]."
        names.append(_require(j, "name", str, path))
        parent = j.get("parent") if isinstance(j, dict) else None
        if "parent" not in j:
            raise SchemaError(f"{path}parent")
        if parent is None:
            parent = -1
        if not isinstance(parent, int) or isinstance(parent, bool):
            raise SchemaError(f"{path}parent", "parent must be an index or null")
        parents.append(parent)
        offsets.append(_vec(_require(j, "offset", list, path), f"{path}offset") * scale)
    landmarks = skel_doc.get("landmarks")
    if landmarks is not None:
        if not isinstance(landmarks, dict) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in landmarks.values()
        ):
            raise SchemaError("skeleton.landmarks")
        landmarks = dict(landmarks)
    try:
        skeleton = Skeleton(
            names=tuple(names),
            parents=tuple(parents),
            offsets=np.array(offsets),
            landmarks=landmarks or {},
        )
    except ValueError as exc:
        raise SchemaError("skeleton", str(exc)) from None

    frames = _require(doc, "frames", list)
    if len(frames) < 2:
        raise SchemaError("frames", "a clip needs at least 2 frames")
    F, J = len(frames), skeleton.n_joints
    root_positions = np.empty((F, 3))
    rotations = np.empty((F, J, 4))
    for f, fr in enumerate(frames):
        path = f"frames[{f}]."
        root_positions[f] = _vec(_require(fr, "root", list, path), f"{path}root") * scale
        rots = _require(fr, "rotations", list, path)
        if len(rots) != J:
            raise SchemaError(f"{path}rotations", "per-joint rotation count mismatch")
        for j, q in enumerate(rots):
            if not isinstance(q, (list, tuple)) or len(q) != 4:
                raise SchemaError(f"{path}rotations[{j}]", "quaternion must have 4 components")
            rotations[f, j] = q
        norms = np.linalg.norm(rotations[f], axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise SchemaError(f"{path}rotations", "quaternions must be unit length")
    rotations = geom.quat_canonical(rotations)

    targets = []
    for k, t in enumerate(doc.get("targets", [])):
        path = f"targets[{k}]."
        targets.append(
            Target(
                label=_require(t, "label", str, path),
                position=_vec(_require(t, "position", list, path), f"{path}position") * scale,
            )
        )

    annotations = []
    for k, a in enumerate(doc.get("annotations", [])):
        path = f"annotations[{k}]."
        hand = _require(a, "hand", str, path)
        if hand not in (Hand.LEFT.value, Hand.RIGHT.value):
            raise SchemaError(f"{path}hand", "hand must be 'left' or 'right'")
        target = a.get("target")
        if target is not None and (not isinstance(target, int) or isinstance(target, bool)):
            raise SchemaError(f"{path}target")
        try:
            annotations.append(
                SegmentMark(
                    hand=Hand(hand),
                    onset=int(_require(a, "onset", int, path)),
                    peak_velocity=int(_require(a, "peak_velocity", int, path)),
                    hold_start=int(_require(a, "hold_start", int, path)),
                    offset=int(_require(a, "offset", int, path)),
                    target=target,
                )
            )
        except ValueError as exc:
            raise SchemaError(f"annotations[{k}]", str(exc)) from None

    source = doc.get("source", "clip")
    if not isinstance(source, str):
        raise SchemaError("source")
    try:
        return Clip(
            skeleton=skeleton,
            fps=fps,
            root_positions=root_positions,
            rotations=rotations,
            targets=tuple(targets),
            source=source,
            annotations=tuple(annotations),
        )
    except ValueError as exc:
        raise SchemaError("document", str(exc)) from None


def write_clip_json(clip: Clip) -> str:
    doc = {
        "fps": clip.fps,
        "units": "m",
        "source": clip.source,
        "skeleton": {
            "joints": [
                {
                    "name": name,
                    "parent": None if parent < 0 else parent,
                    "offset": list(map(float, offset)),
                }
                for name, parent, offset in zip(
                    clip.skeleton.names, clip.skeleton.parents, clip.skeleton.offsets
                )
            ],
            "landmarks": dict(sorted(clip.skeleton.landmarks.items())),
        },
        "frames": [
            {
                "root": list(map(float, clip.root_positions[f])),
                "rotations": [list(map(float, q)) for q in clip.rotations[f]],
            }
            for f in range(clip.n_frames)
        ],
        "targets": [
            {"label": t.label, "position": list(map(float, t.position))} for t in clip.targets
        ],
        "annotations": [
            {
                "hand": m.hand.value,
                "onset": m.onset,
                "peak_velocity": m.peak_velocity,
                "hold_start": m.hold_start,
                "offset": m.offset,
                "target": m.target,
            }
            for m in clip.annotations
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


# ---------------------------------------------------------------------------
# displacement, segmentation, statistics


def sagittal_displacement(clip: Clip, hand: Hand) -> np.ndarray:
    """Per-frame distance of the hand from its frame-0 position, projected
    onto the sagittal (Y-Z) plane. Lateral (X) motion does not register."""
    h = clip.skeleton.hand(hand)
    positions = clip.joint_positions[:, h, :]
    delta = positions - positions[0]
    return np.hypot(delta[:, 1], delta[:, 2])


def hand_speed(clip: Clip, hand: Hand) -> np.ndarray:
    """Hand speed (m/s) between consecutive frames, length F-1.

    speed[t] covers the transition from frame t to t+1.
    """
    h = clip.skeleton.hand(hand)
    positions = clip.joint_positions[:, h, :]
    vel = geom.finite_difference(positions, dt=1.0 / clip.fps, order=1)
    return np.linalg.norm(vel, axis=-1)


@dataclass(frozen=True)
class SegmentationParams:
    """Thresholds for displacement-peak segmentation (meters)."""

    min_peak_height: float = 0.25
    min_prominence: float = 0.15
    rest_threshold: float = 0.05
    hold_speed_fraction: float = 0.1

    def __post_init__(self):
        if min(self.min_peak_height, self.min_prominence, self.rest_threshold) <= 0:
            raise ValueError("segmentation thresholds must be positive")
        if not 0 < self.hold_speed_fraction < 1:
            raise ValueError("hold_speed_fraction must be in (0, 1)")


def mark_from_displacement(
    disp: np.ndarray,
    speed: np.ndarray,
    peak: int,
    params: SegmentationParams,
) -> tuple[int, int, int, int]:
    """Landmark frames (onset, peak-velocity, hold-start, offset) around a
    displacement peak. Shared by segmentation and the synthetic generator so
    generated annotations and recovered segments use identical definitions."""
    n = disp.shape[0]
    below = disp[: peak + 1] <= params.rest_threshold
    idx = np.nonzero(below)[0]
    onset = int(idx[-1]) if idx.size else 0
    after = np.nonzero(disp[peak:] <= params.rest_threshold)[0]
    offset = int(peak + after[0]) if after.size else n

    lo = onset + 1
    hi = max(peak, lo + 1)
    pv = lo + int(np.argmax(speed[lo:hi]))
    threshold = params.hold_speed_fraction * speed[pv]
    hold = None
    for t in range(pv + 1, min(offset, speed.shape[0])):
        if speed[t] < threshold:
            hold = t
            break
    if hold is None:
        hold = max(pv + 1, offset - 1)
    hold = min(hold, offset - 1)
    return onset, pv, max(hold, pv), offset


def _ray_point_distance(origin: np.ndarray, direction: np.ndarray, point: np.ndarray) -> float:
    """Distance from a point to the ray origin + s*direction, s >= 0."""
    d = direction / np.linalg.norm(direction)
    rel = point - origin
    s = max(0.0, float(np.dot(rel, d)))
    return float(np.linalg.norm(rel - s * d))


def segment_pointing(clip: Clip, params: SegmentationParams | None = None) -> list[Segment]:
    """Find single-arm pointing movements from sagittal displacement peaks.

    For every hand present in the skeleton, local displacement maxima that
    clear the height and prominence thresholds become candidate movements.
    The onset is the last frame before the peak at rest, the offset the first
    frame after it back at rest (clip end if it never returns). The target is
    the one closest to the pointing ray (hand along the forearm) at hold
    start, or None when the clip carries no targets.
    """
    if clip.duration < 1.0:
        raise ValueError("clip shorter than 1 s cannot be segmented")
    params = params or SegmentationParams()
    segments: list[Segment] = []
    for hand in (Hand.LEFT, Hand.RIGHT):
        if not clip.skeleton.has_arm(hand):
            continue
        disp = sagittal_displacement(clip, hand)
        speed = hand_speed(clip, hand)
        peaks, _ = find_peaks(
            disp, height=params.min_peak_height, prominence=params.min_prominence
        )
        last_offset = -1
        for peak in peaks:
            onset, pv, hold, offset = mark_from_displacement(disp, speed, int(peak), params)
            if onset < last_offset:  # same movement produced two raw peaks
                continue
            last_offset = offset
            target_index = None
            if clip.targets:
                positions = clip.joint_positions[hold]
                elbow = positions[clip.skeleton.elbow(hand)]
                hand_pos = positions[clip.skeleton.hand(hand)]
                direction = hand_pos - elbow
                if np.linalg.norm(direction) > geom.LENGTH_EPS:
                    dists = [
                        _ray_point_distance(hand_pos, direction, t.position)
                        for t in clip.targets
                    ]
                    target_index = int(np.argmin(dists))
                else:
                    target_index = 0
            segments.append(
                Segment(
                    clip=clip,
                    hand=hand,
                    onset=onset,
                    peak_velocity=pv,
                    hold_start=hold,
                    offset=offset,
                    target_index=target_index,
                )
            )
    if not segments:
        raise NoMovementFound(
            f"no displacement peak >= {params.min_peak_height} m with prominence "
            f">= {params.min_prominence} m in clip {clip.source!r}"
        )
    segments.sort(key=lambda s: (s.onset, s.hand.value))
    return segments


def kinematic_stats(segment: Segment) -> KinematicStats:
    """Duration/rise/velocity summary of one movement (velocities in mm/s).

    Peak velocity is the maximum hand speed over the whole movement; mean
    velocity averages over the rise phase (onset to hold start).
    """
    clip = segment.clip
    speed = hand_speed(clip, segment.hand)
    window = speed[segment.onset : max(segment.onset + 1, segment.offset - 1)]
    rise = speed[segment.onset : max(segment.onset + 1, segment.hold_start)]
    return KinematicStats(
        duration=(segment.offset - segment.onset) / clip.fps,
        rise_time=(segment.hold_start - segment.onset) / clip.fps,
        peak_velocity=float(np.max(window)) * 1000.0,
        mean_velocity=float(np.mean(rise)) * 1000.0,
    )


def precision_profile(segment: Segment) -> np.ndarray:
    """Per-frame pointing precision over [onset, offset).

    precision = 1 - angle(hand->target, elbow->hand) / pi, in [0, 1].
    Frames where either vector degenerates are NaN gaps.
    """
    clip = segment.clip
    if segment.target_index is None:
        raise ValueError("segment has no target to point at")
    target = clip.targets[segment.target_index].position
    marks = clip.skeleton
    positions = clip.joint_positions
    elbow = positions[:, marks.elbow(segment.hand), :]
    hand = positions[:, marks.hand(segment.hand), :]
    out = np.full(segment.offset - segment.onset, np.nan)
    for i, f in enumerate(range(segment.onset, segment.offset)):
        try:
            angle = geom.angle_between(target - hand[f], hand[f] - elbow[f])
        except DegenerateVector:
            continue
        out[i] = 1.0 - angle / math.pi
    return out


def classify_octant(target: np.ndarray, body: BodyFrame) -> Octant:
    """Assign a target to a spatial octant in the body frame.

    Left/right splits on the body midline (x = origin.x, +x is the actor's
    left), top/bottom at shoulder height, front/back at the chest plane
    (z = origin.z, actor faces +z). Boundary ties go to Right/Bottom/Front.
    """
    target = np.asarray(target, dtype=np.float64)
    x = target[0] - body.origin[0]
    y = target[1] - body.shoulder_height
    z = target[2] - body.origin[2]
    return Octant(front=z >= 0.0, left=x > 0.0, top=y > 0.0)


def count_octants(segments) -> dict[Octant, int]:
    """Octant counts over segment targets. Cells with no hits are present with 0."""
    counts = {octant: 0 for octant in OCTANT_ORDER}
    for seg in segments:
        if seg.target_index is None:
            continue
        body = BodyFrame.from_clip(seg.clip)
        octant = classify_octant(seg.clip.targets[seg.target_index].position, body)
        counts[octant] += 1
    return counts


def resample_series(series: np.ndarray, bins: int) -> np.ndarray:
    series = np.asarray(series, dtype=np.float64)
    if series.shape[0] == 1:
        return np.full(bins, series[0])
    x_old = np.linspace(0.0, 1.0, series.shape[0])
    return np.interp(np.linspace(0.0, 1.0, bins), x_old, series)


def velocity_profile(segments, bins: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sd of time-normalized hand-speed profiles across segments.

    Each segment's speed series over [onset, offset) is linearly resampled to
    ``bins`` samples; mean and population sd are taken per bin.
    """
    if not segments:
        raise ValueError("need at least one segment")
    rows = []
    for seg in segments:
        speed = hand_speed(seg.clip, seg.hand)
        window = speed[seg.onset : max(seg.onset + 1, seg.offset - 1)]
        rows.append(resample_series(window, bins))
    stack = np.stack(rows)
    return stack.mean(axis=0), stack.std(axis=0)
