import numpy as np
import pytest

from armpoint import geom
from armpoint.mocap import Clip, Target


def arm_chain_skeleton():
    """Minimal root->elbow->hand chain with right-arm landmarks."""
    return geom.Skeleton(
        names=("root", "right_elbow", "right_hand"),
        parents=(-1, 0, 1),
        offsets=np.array([[0.0, 0.0, 0.0], [0.0, 0.3, 0.0], [0.0, 0.3, 0.0]]),
        landmarks={"root": 0, "right_shoulder": 0, "right_elbow": 1, "right_hand": 2},
    )


def translating_hand_clip(hand_path, fps=120.0, targets=(), source="test-clip"):
    """Clip whose right hand traces ``hand_path`` exactly.

    The chain is rigid with identity rotations; the root carries all motion,
    so hand = root + (0, 0.6, 0) and the forearm always points +Y.
    """
    skel = arm_chain_skeleton()
    path = np.asarray(hand_path, dtype=np.float64)
    roots = path - np.array([0.0, 0.6, 0.0])
    rots = np.zeros((path.shape[0], 3, 4))
    rots[:, :, 0] = 1.0
    return Clip(
        skeleton=skel,
        fps=fps,
        root_positions=roots,
        rotations=rots,
        targets=tuple(Target(f"target-{i}", p) for i, p in enumerate(targets)),
        source=source,
    )


@pytest.fixture
def chain_skeleton():
    return arm_chain_skeleton()
