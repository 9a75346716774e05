"""Domain types: poses, labels, clips, plans and synthesized motion.

All types are immutable values (frozen dataclasses over read-only numpy
arrays), safe to share between threads. Mirroring across the x = 0 plane
is defined right on the types so clip mirroring composes from parts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ValidationError
from .geometry import normalize_yaw, rot_y


def _frozen_vec3(v) -> np.ndarray:
    a = np.array(v, dtype=np.float64).reshape(3)
    a.setflags(write=False)
    return a


def _frozen_array(v, shape_tail=()) -> np.ndarray:
    a = np.array(v, dtype=np.float64)
    if a.ndim != 1 + len(shape_tail) or a.shape[1:] != shape_tail:
        raise ValidationError(f"expected array of shape (N,{shape_tail}), got {a.shape}")
    a.setflags(write=False)
    return a


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT

    @property
    def lateral_sign(self) -> float:
        """Lateral placement convention: left feet sit at negative x."""
        return -1.0 if self is Side.LEFT else 1.0


class Family(Enum):
    """Behaviour family decided by the global footprint pattern."""

    WALKING = "walking"
    RUNNING = "running"
    JUMPING = "jumping"
    STAIR = "stair"
    UNREACHABLE = "unreachable"


class BehaviourKind(Enum):
    WALKING = "walking"
    RUNNING = "running"
    STAIR_STEP = "stair_step"
    JUMP_BOTH_LIFT_BOTH_LAND = "jump_both_lift_both_land"
    JUMP_ONE_LIFT_BOTH_LAND = "jump_one_lift_both_land"
    JUMP_BOTH_LIFT_ONE_LAND = "jump_both_lift_one_land"
    JUMP_ONE_LIFT_ONE_LAND = "jump_one_lift_one_land"


JUMP_KINDS = frozenset({
    BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND,
    BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND,
    BehaviourKind.JUMP_BOTH_LIFT_ONE_LAND,
    BehaviourKind.JUMP_ONE_LIFT_ONE_LAND,
})


@dataclass(frozen=True)
class BehaviourLabel:
    """Semantic label of a step; jump variants carry the leading foot."""

    kind: BehaviourKind
    lead: Side | None = None

    def __post_init__(self):
        if self.kind in JUMP_KINDS:
            if self.lead is None:
                raise ValidationError(f"{self.kind.value} requires a leading side")
        elif self.lead is not None:
            raise ValidationError(f"{self.kind.value} must not carry a leading side")

    @property
    def family(self) -> Family:
        if self.kind is BehaviourKind.WALKING:
            return Family.WALKING
        if self.kind is BehaviourKind.RUNNING:
            return Family.RUNNING
        if self.kind is BehaviourKind.STAIR_STEP:
            return Family.STAIR
        return Family.JUMPING

    @property
    def is_jump(self) -> bool:
        return self.kind in JUMP_KINDS

    def mirrored(self) -> "BehaviourLabel":
        if self.lead is None:
            return self
        return BehaviourLabel(self.kind, self.lead.other)


WALKING = BehaviourLabel(BehaviourKind.WALKING)
RUNNING = BehaviourLabel(BehaviourKind.RUNNING)
STAIR_STEP = BehaviourLabel(BehaviourKind.STAIR_STEP)


@dataclass(frozen=True)
class FootPose:
    """One foot's state: foot-joint position, yaw about y, toe position."""

    foot_pos: np.ndarray
    yaw: float
    toe_pos: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "foot_pos", _frozen_vec3(self.foot_pos))
        object.__setattr__(self, "toe_pos", _frozen_vec3(self.toe_pos))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))
        if not np.any(self.foot_pos != self.toe_pos):
            raise ValidationError("foot and toe must be distinct points")

    def __eq__(self, other):
        return (isinstance(other, FootPose)
                and np.array_equal(self.foot_pos, other.foot_pos)
                and self.yaw == other.yaw
                and np.array_equal(self.toe_pos, other.toe_pos))

    def __hash__(self):
        return hash((bytes(self.foot_pos), self.yaw, bytes(self.toe_pos)))

    def mirrored(self) -> "FootPose":
        return FootPose(self.foot_pos * (-1.0, 1.0, 1.0), -self.yaw,
                        self.toe_pos * (-1.0, 1.0, 1.0))


def foot_pose(pos, yaw: float, toe_offset: float = 0.15) -> FootPose:
    """Build a FootPose with the toe derived from yaw and a forward offset."""
    pos = np.asarray(pos, dtype=np.float64)
    return FootPose(pos, yaw, pos + rot_y(np.array([0.0, 0.0, toe_offset]), yaw))


IDENTITY_POSE = foot_pose((0.0, 0.0, 0.0), 0.0)


@dataclass(frozen=True)
class Footprint:
    """A user-placed target: side, ground position (y = height) and yaw."""

    side: Side
    pos: np.ndarray
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "pos", _frozen_vec3(self.pos))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    def __eq__(self, other):
        return (isinstance(other, Footprint) and self.side is other.side
                and np.array_equal(self.pos, other.pos) and self.yaw == other.yaw)

    def __hash__(self):
        return hash((self.side, bytes(self.pos), self.yaw))

    def toe_target(self, toe_offset: float) -> np.ndarray:
        return self.pos + rot_y(np.array([0.0, 0.0, toe_offset]), self.yaw)

    def to_pose(self, toe_offset: float) -> FootPose:
        return FootPose(self.pos, self.yaw, self.toe_target(toe_offset))

    def mirrored(self) -> "Footprint":
        return Footprint(self.side.other, self.pos * (-1.0, 1.0, 1.0), -self.yaw)

    def moved(self, pos=None, yaw=None) -> "Footprint":
        return Footprint(self.side,
                         self.pos if pos is None else pos,
                         self.yaw if yaw is None else yaw)


@dataclass(frozen=True)
class FootprintPlan:
    """Ordered footprints; the first two define the initial stance."""

    footprints: tuple[Footprint, ...]

    def __post_init__(self):
        object.__setattr__(self, "footprints", tuple(self.footprints))
        if len(self.footprints) < 2:
            raise ValidationError("a plan needs at least 2 footprints")

    def __len__(self):
        return len(self.footprints)

    def __getitem__(self, i) -> Footprint:
        return self.footprints[i]

    def __iter__(self):
        return iter(self.footprints)

    def mirrored(self) -> "FootprintPlan":
        return FootprintPlan(tuple(fp.mirrored() for fp in self.footprints))

    def with_footprint(self, index: int, fp: Footprint) -> "FootprintPlan":
        prints = list(self.footprints)
        prints[index] = fp
        return FootprintPlan(tuple(prints))


@dataclass(frozen=True)
class PoseTrack:
    """Frame-sampled root and feet poses as column arrays, one row per frame."""

    root_pos: np.ndarray   # (N, 3)
    root_yaw: np.ndarray   # (N,)
    left_foot: np.ndarray  # (N, 3)
    left_yaw: np.ndarray   # (N,)
    left_toe: np.ndarray   # (N, 3)
    right_foot: np.ndarray
    right_yaw: np.ndarray
    right_toe: np.ndarray

    def __post_init__(self):
        for name in ("root_pos", "left_foot", "left_toe", "right_foot", "right_toe"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), (3,)))
        for name in ("root_yaw", "left_yaw", "right_yaw"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        n = {getattr(self, f).shape[0] for f in self.__dataclass_fields__}
        if len(n) != 1:
            raise ValidationError("all track arrays must share the frame count")

    def __len__(self):
        return self.root_pos.shape[0]

    def __eq__(self, other):
        return isinstance(other, PoseTrack) and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in self.__dataclass_fields__)

    def foot_pose(self, side: Side, i: int) -> FootPose:
        if side is Side.LEFT:
            return FootPose(self.left_foot[i], self.left_yaw[i], self.left_toe[i])
        return FootPose(self.right_foot[i], self.right_yaw[i], self.right_toe[i])

    def foot_arrays(self, side: Side) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if side is Side.LEFT:
            return self.left_foot, self.left_yaw, self.left_toe
        return self.right_foot, self.right_yaw, self.right_toe

    def mirrored(self) -> "PoseTrack":
        flip = np.array([-1.0, 1.0, 1.0])
        return PoseTrack(
            root_pos=self.root_pos * flip, root_yaw=-self.root_yaw,
            left_foot=self.right_foot * flip, left_yaw=-self.right_yaw,
            left_toe=self.right_toe * flip,
            right_foot=self.left_foot * flip, right_yaw=-self.left_yaw,
            right_toe=self.left_toe * flip)

    def sliced(self, start: int, stop: int) -> "PoseTrack":
        return PoseTrack(*(getattr(self, f)[start:stop]
                           for f in self.__dataclass_fields__))


def concat_tracks(tracks: list[PoseTrack]) -> PoseTrack:
    fields = PoseTrack.__dataclass_fields__
    return PoseTrack(*(np.concatenate([getattr(t, f) for t in tracks])
                       for f in fields))


@dataclass(frozen=True)
class StepClip:
    """One recorded step: support pose, local start/end of the acting foot,
    root velocity, behaviour label and the sampled frames."""

    id: str
    support: FootPose
    support_side: Side
    start_local: FootPose
    end_local: FootPose
    v_root: float
    label: BehaviourLabel
    fps: float
    frames: PoseTrack

    @property
    def acting_side(self) -> Side:
        return self.support_side.other

    @property
    def n_frames(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class StepAnnotation:
    plan_index: int
    label: BehaviourLabel
    frame_start: int
    frame_end: int
    consumed: int = 1


@dataclass(frozen=True)
class MotionOutput:
    """Synthesized motion at a fixed rate with per-foot contact flags."""

    fps: float
    frames: PoseTrack
    left_contact: np.ndarray   # (N,) bool
    right_contact: np.ndarray  # (N,) bool
    steps: tuple[StepAnnotation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("left_contact", "right_contact"):
            a = np.array(getattr(self, name), dtype=bool)
            if a.shape != (len(self.frames),):
                raise ValidationError("contact flags must match the frame count")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "steps", tuple(self.steps))

    def contact(self, side: Side) -> np.ndarray:
        return self.left_contact if side is Side.LEFT else self.right_contact
