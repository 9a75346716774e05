"""Step-clip database: ingestion, mirroring, limit analysis and alignment.

Building a database scans the clip collection once and derives everything
classification needs later: per-family plane-distance bands, the stitched
walk<run<jump ladder, jump simultaneity thresholds and the toe offset.
A built database is immutable; all queries are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from types import MappingProxyType

import numpy as np

from .errors import EmptyFamily, InvertedLimits, SideMismatch, ValidationError
from .geometry import normalize_yaw, plane_distance, rot_y
from .transforms import GroundRigid, to_global, to_local
from .types import (BehaviourKind, BehaviourLabel, Family, FootPose, Footprint,
                    PoseTrack, Side, StepClip)

MIN_CLIPS_PER_SIDE = 4  # the enclosing polygon needs 4 candidate end poses

_POSE_TOL_POS = 1e-6
_POSE_TOL_ANG = 1e-6


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValidationError(f"inverted range [{self.lo}, {self.hi}]")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class BehaviourLimits:
    """Stitched per-family distance bands plus jump/stair thresholds."""

    walking: Range
    running: Range
    jumping: Range
    stair: Range
    l_stair_height: float
    theta_thres_lift: float
    theta_thres_land: float
    d_feet_max: float

    def range_of(self, family: Family) -> Range:
        return {Family.WALKING: self.walking, Family.RUNNING: self.running,
                Family.JUMPING: self.jumping, Family.STAIR: self.stair}[family]


def stance_angle(support_pos, support_yaw: float, other_pos) -> float:
    """Angle of the inter-foot segment relative to the support's lateral axis.

    0 for feet exactly side by side, +-pi/2 for feet exactly fore-aft.
    Measured in the support's frame with the lateral coordinate folded to
    its magnitude, so mirrored stances give the same angle.
    """
    rel = rot_y(np.asarray(other_pos, dtype=np.float64)
                - np.asarray(support_pos, dtype=np.float64), -support_yaw)
    return float(np.arctan2(rel[2], abs(rel[0])))


def clip_travel(clip: StepClip) -> float:
    """Plane distance the acting foot covers, support-frame invariant."""
    return plane_distance(clip.start_local.foot_pos, clip.end_local.foot_pos)


def validate_clip(clip: StepClip) -> None:
    """Ingestion gate: structural invariants every stored clip must satisfy."""
    if len(clip.frames) < 1:
        raise ValidationError(f"clip {clip.id}: no frames")
    if clip.fps <= 0:
        raise ValidationError(f"clip {clip.id}: fps must be positive")
    if clip.v_root < 0:
        raise ValidationError(f"clip {clip.id}: v_root must be non-negative")
    act = clip.acting_side
    for frame, expected, name in ((0, clip.start_local, "start"),
                                  (len(clip.frames) - 1, clip.end_local, "end")):
        got = to_local(clip.frames.foot_pose(act, frame), clip.support)
        if (np.max(np.abs(got.foot_pos - expected.foot_pos)) > _POSE_TOL_POS
                or abs(normalize_yaw(got.yaw - expected.yaw)) > _POSE_TOL_ANG
                or np.max(np.abs(got.toe_pos - expected.toe_pos)) > _POSE_TOL_POS):
            raise ValidationError(
                f"clip {clip.id}: {name} frame does not match {name}_local")


def mirror_clip(clip: StepClip, clip_id: str | None = None) -> StepClip:
    """Reflect a clip across the x = 0 plane, swapping left and right."""
    return StepClip(
        id=clip.id + "~m" if clip_id is None else clip_id,
        support=clip.support.mirrored(),
        support_side=clip.support_side.other,
        start_local=clip.start_local.mirrored(),
        end_local=clip.end_local.mirrored(),
        v_root=clip.v_root,
        label=clip.label.mirrored(),
        fps=clip.fps,
        frames=clip.frames.mirrored(),
    )


def align_support(clip: StepClip, target: Footprint) -> StepClip:
    """Rigidly re-plant a clip so its support pose matches the footprint."""
    if clip.support_side is not target.side:
        raise SideMismatch(
            f"clip {clip.id} supports {clip.support_side.value}, footprint is "
            f"{target.side.value}")
    rigid = GroundRigid.aligning(clip.support.foot_pos, clip.support.yaw,
                                 target.pos, target.yaw)
    t = clip.frames
    frames = PoseTrack(
        root_pos=rigid.apply(t.root_pos), root_yaw=rigid.apply_yaw(t.root_yaw),
        left_foot=rigid.apply(t.left_foot), left_yaw=rigid.apply_yaw(t.left_yaw),
        left_toe=rigid.apply(t.left_toe),
        right_foot=rigid.apply(t.right_foot), right_yaw=rigid.apply_yaw(t.right_yaw),
        right_toe=rigid.apply(t.right_toe),
    )
    return replace(clip, support=rigid.apply_pose(clip.support), frames=frames)


def stitch_limits(raw: dict[Family, Range], *, l_stair_height: float,
                  theta_thres_lift: float, theta_thres_land: float,
                  d_feet_max: float) -> BehaviourLimits:
    """Stitch raw bands into a ladder: run starts where walk ends, jump
    where run ends. Raw bands stay available for overlap queries."""
    walk, run, jump = raw[Family.WALKING], raw[Family.RUNNING], raw[Family.JUMPING]
    if walk.hi >= run.hi or run.hi >= jump.hi:
        raise InvertedLimits(
            f"family upper limits must increase: walk {walk.hi} / run {run.hi} "
            f"/ jump {jump.hi}")
    return BehaviourLimits(
        walking=walk,
        running=Range(walk.hi, run.hi),
        jumping=Range(run.hi, jump.hi),
        stair=raw[Family.STAIR],
        l_stair_height=l_stair_height,
        theta_thres_lift=theta_thres_lift,
        theta_thres_land=theta_thres_land,
        d_feet_max=d_feet_max,
    )


def _lift_land_stances(clip: StepClip):
    """(support_pos, support_yaw, acting_pos) at the first and last frame."""
    act = clip.acting_side
    sup = clip.support_side
    first_sup = clip.frames.foot_pose(sup, 0)
    last_sup = clip.frames.foot_pose(sup, len(clip.frames) - 1)
    start = to_global(clip.start_local, clip.support)
    end = to_global(clip.end_local, clip.support)
    lift = (first_sup.foot_pos, first_sup.yaw, start.foot_pos)
    land = (last_sup.foot_pos, last_sup.yaw, end.foot_pos)
    return lift, land


@dataclass(frozen=True)
class MotionDatabase:
    """Immutable clip collection with all derived limits precomputed."""

    clips: tuple[StepClip, ...]
    limits: BehaviourLimits
    raw_limits: MappingProxyType
    toe_offset: float
    root_height: float
    base_velocity: MappingProxyType

    def __post_init__(self):
        by_id = {}
        groups: dict[tuple[Family, Side], list[StepClip]] = {}
        for clip in self.clips:
            if clip.id in by_id:
                raise ValidationError(f"duplicate clip id {clip.id}")
            by_id[clip.id] = clip
            groups.setdefault((clip.label.family, clip.support_side), []).append(clip)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_groups",
                           {k: tuple(v) for k, v in groups.items()})

    def get(self, clip_id: str) -> StepClip:
        try:
            return self._by_id[clip_id]
        except KeyError:
            raise ValidationError(f"unknown clip id {clip_id}") from None

    def clips_for(self, family: Family, support_side: Side) -> tuple[StepClip, ...]:
        return self._groups.get((family, support_side), ())

    @property
    def n_clips(self) -> int:
        return len(self.clips)


def scan_raw_limits(clips) -> dict[Family, Range]:
    distances: dict[Family, list[float]] = {}
    for clip in clips:
        distances.setdefault(clip.label.family, []).append(clip_travel(clip))
    return {fam: Range(min(ds), max(ds)) for fam, ds in distances.items()}


def build(clips: list[StepClip], *, auto_mirror: bool = False,
          theta_thres: float | None = None,
          min_per_side: int = MIN_CLIPS_PER_SIDE) -> MotionDatabase:
    """Analyze a clip collection into a queryable database.

    Every family needs at least ``min_per_side`` clips per support side;
    ``auto_mirror`` fills the other side by reflection when a corpus was
    recorded one-sided.
    """
    if not clips:
        raise ValidationError("no clips given")
    clips = list(clips)
    for clip in clips:
        validate_clip(clip)
    if auto_mirror:
        clips.extend(mirror_clip(c) for c in list(clips))

    counts: dict[tuple[Family, Side], int] = {}
    for clip in clips:
        key = (clip.label.family, clip.support_side)
        counts[key] = counts.get(key, 0) + 1
    for family in (Family.WALKING, Family.RUNNING, Family.JUMPING, Family.STAIR):
        for side in Side:
            if counts.get((family, side), 0) < min_per_side:
                raise EmptyFamily(family, side, counts.get((family, side), 0),
                                  min_per_side)

    raw = scan_raw_limits(clips)

    lift_angles, land_angles = [], []
    both_feet_dists = []
    for clip in clips:
        if clip.label.family is not Family.JUMPING:
            continue
        (lp, ly, la), (dp, dy, da) = _lift_land_stances(clip)
        lift_angles.append(abs(stance_angle(lp, ly, la)))
        land_angles.append(abs(stance_angle(dp, dy, da)))
        if clip.label.kind in (BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND,
                               BehaviourKind.JUMP_BOTH_LIFT_ONE_LAND):
            both_feet_dists.append(plane_distance(lp, la))
        if clip.label.kind in (BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND,
                               BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND):
            both_feet_dists.append(plane_distance(dp, da))

    stair_gains = [clip.end_local.foot_pos[1] - clip.start_local.foot_pos[1]
                   for clip in clips if clip.label.family is Family.STAIR]

    toe_offsets = []
    root_rel = []
    for clip in clips:
        for pose in (clip.support, clip.start_local, clip.end_local):
            toe_offsets.append(rot_y(pose.toe_pos - pose.foot_pos, -pose.yaw)[2])
        root_rel.append(float(np.mean(clip.frames.root_pos[:, 1]))
                        - clip.support.foot_pos[1])

    v_by_family: dict[Family, list[float]] = {}
    for clip in clips:
        v_by_family.setdefault(clip.label.family, []).append(clip.v_root)

    limits = stitch_limits(
        raw,
        l_stair_height=max(stair_gains),
        theta_thres_lift=theta_thres if theta_thres is not None
        else float(np.mean(lift_angles)),
        theta_thres_land=theta_thres if theta_thres is not None
        else float(np.mean(land_angles)),
        d_feet_max=max(both_feet_dists),
    )
    return MotionDatabase(
        clips=tuple(clips),
        limits=limits,
        raw_limits=MappingProxyType(dict(raw)),
        toe_offset=float(np.mean(toe_offsets)),
        root_height=float(np.mean(root_rel)),
        base_velocity=MappingProxyType(
            {fam: float(np.mean(vs)) for fam, vs in v_by_family.items()}),
    )


def overlap_region(db: MotionDatabase, lower: Family, higher: Family) -> Range | None:
    """Raw-band intersection between two adjacent families, if any."""
    lo_band = db.raw_limits[lower]
    hi_band = db.raw_limits[higher]
    if hi_band.lo < lo_band.hi:
        return Range(hi_band.lo, lo_band.hi)
    return None


def limits_to_json(limits: BehaviourLimits) -> dict:
    return {
        "walking": [limits.walking.lo, limits.walking.hi],
        "running": [limits.running.lo, limits.running.hi],
        "jumping": [limits.jumping.lo, limits.jumping.hi],
        "stair": [limits.stair.lo, limits.stair.hi],
        "l_stair_height": limits.l_stair_height,
        "theta_thres_lift": limits.theta_thres_lift,
        "theta_thres_land": limits.theta_thres_land,
        "d_feet_max": limits.d_feet_max,
    }


def db_to_json(db: MotionDatabase, *, theta_thres: float | None = None) -> dict:
    from .formats import clip_to_json

    return {
        "clips": [clip_to_json(c) for c in db.clips],
        "limits": limits_to_json(db.limits),
        "raw_limits": {fam.value: [r.lo, r.hi] for fam, r in db.raw_limits.items()},
        "toe_offset": db.toe_offset,
        "root_height": db.root_height,
        "base_velocity": {fam.value: v for fam, v in db.base_velocity.items()},
        "theta_thres_override": theta_thres,
    }


def db_from_json(obj) -> MotionDatabase:
    """Rebuild a database from its serialized clips.

    Derived limits are recomputed from scratch and must match the stored
    ones exactly; a mismatch means the file was edited by hand or written
    by an incompatible version.
    """
    from .formats import clip_from_json

    clips = [clip_from_json(c) for c in obj["clips"]]
    db = build(clips, theta_thres=obj.get("theta_thres_override"))
    stored = obj.get("limits")
    if stored is not None and stored != limits_to_json(db.limits):
        raise ValidationError("stored limits are stale: rescan disagrees")
    return db
