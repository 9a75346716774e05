"""Support-frame transforms and ground-plane rigid maps.

Acting-foot poses are stored relative to their supporting foot; these
helpers move poses between that local frame and world space, and build
the rigid map that re-plants a whole clip onto a new support footprint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import normalize_yaw, normalize_yaw_array, rot_y
from .types import FootPose

_ORIGIN = np.zeros(3)


def to_global(pose_local: FootPose, support: FootPose) -> FootPose:
    """Express a support-relative pose in world coordinates."""
    return FootPose(
        support.foot_pos + rot_y(pose_local.foot_pos, support.yaw),
        normalize_yaw(support.yaw + pose_local.yaw),
        support.foot_pos + rot_y(pose_local.toe_pos, support.yaw),
    )


def to_local(pose_global: FootPose, support: FootPose) -> FootPose:
    """Express a world pose relative to a supporting foot. Inverse of to_global."""
    return FootPose(
        rot_y(pose_global.foot_pos - support.foot_pos, -support.yaw),
        normalize_yaw(pose_global.yaw - support.yaw),
        rot_y(pose_global.toe_pos - support.foot_pos, -support.yaw),
    )


@dataclass(frozen=True)
class GroundRigid:
    """Rigid motion of the ground plane: rotate about y by `yaw`, then translate."""

    yaw: float
    translation: np.ndarray

    def __post_init__(self):
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "GroundRigid":
        return cls(0.0, _ORIGIN)

    @classmethod
    def aligning(cls, src_pos, src_yaw: float, dst_pos, dst_yaw: float) -> "GroundRigid":
        """Map taking (src_pos, src_yaw) exactly onto (dst_pos, dst_yaw)."""
        dyaw = normalize_yaw(dst_yaw - src_yaw)
        return cls(dyaw, np.asarray(dst_pos, dtype=np.float64)
                   - rot_y(np.asarray(src_pos, dtype=np.float64), dyaw))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return rot_y(points, self.yaw) + self.translation

    def apply_yaw(self, yaw):
        if np.ndim(yaw) == 0:
            return normalize_yaw(yaw + self.yaw)
        return normalize_yaw_array(np.asarray(yaw, dtype=np.float64) + self.yaw)

    def apply_pose(self, pose: FootPose) -> FootPose:
        return FootPose(self.apply(pose.foot_pos), normalize_yaw(pose.yaw + self.yaw),
                        self.apply(pose.toe_pos))
