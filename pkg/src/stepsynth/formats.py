"""JSON file formats for clips, plans and synthesized animations.

One canonical serializer is shared by the CLI and the HTTP service so the
same payload always produces the same bytes. Angles are written with both
an exact radian key and a human-friendly degree key; readers prefer
``yaw_rad`` so a write/read round trip reproduces every float bit-exactly
(degrees alone would lose the last ulp in the unit conversion).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .types import (BehaviourKind, BehaviourLabel, FootPose, Footprint,
                    FootprintPlan, MotionOutput, PoseTrack, Side,
                    StepAnnotation, StepClip)


def to_canonical_json(payload) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_json(payload, path) -> None:
    Path(path).write_text(to_canonical_json(payload))


def read_json(path):
    return json.loads(Path(path).read_text())


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=np.float64)]


def _yaw_keys(yaw: float) -> dict:
    return {"yaw_rad": float(yaw), "yaw_deg": math.degrees(yaw)}


def _read_yaw(obj, what: str = "pose") -> float:
    if "yaw_rad" in obj:
        return float(obj["yaw_rad"])
    if "yaw_deg" in obj:
        return math.radians(float(obj["yaw_deg"]))
    raise ValidationError(f"{what} needs yaw_rad or yaw_deg")


def pose_to_json(pose: FootPose) -> dict:
    return {"foot": _vec(pose.foot_pos), **_yaw_keys(pose.yaw), "toe": _vec(pose.toe_pos)}


def pose_from_json(obj) -> FootPose:
    try:
        return FootPose(obj["foot"], _read_yaw(obj), obj["toe"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad pose payload: {exc}") from exc


def side_to_json(side: Side) -> str:
    return side.value


def side_from_json(value) -> Side:
    try:
        return Side(value)
    except ValueError as exc:
        raise ValidationError(f"unknown side {value!r}") from exc


def label_to_json(label: BehaviourLabel) -> dict:
    out = {"kind": label.kind.value}
    if label.lead is not None:
        out["lead"] = label.lead.value
    return out


def label_from_json(obj) -> BehaviourLabel:
    try:
        kind = BehaviourKind(obj["kind"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(f"bad label payload: {exc}") from exc
    lead = obj.get("lead")
    return BehaviourLabel(kind, side_from_json(lead) if lead is not None else None)


def clip_to_json(clip: StepClip) -> dict:
    t = clip.frames
    return {
        "id": clip.id,
        "support": pose_to_json(clip.support),
        "support_side": side_to_json(clip.support_side),
        "start_local": pose_to_json(clip.start_local),
        "end_local": pose_to_json(clip.end_local),
        "v_root": float(clip.v_root),
        "label": label_to_json(clip.label),
        "fps": float(clip.fps),
        "frames": [
            {
                "root": _vec(t.root_pos[i]), **_yaw_keys(t.root_yaw[i]),
                "left": pose_to_json(t.foot_pose(Side.LEFT, i)),
                "right": pose_to_json(t.foot_pose(Side.RIGHT, i)),
            }
            for i in range(len(t))
        ],
    }


def _track_from_json(frames) -> PoseTrack:
    if not frames:
        raise ValidationError("frames must be non-empty")
    left = [pose_from_json(f["left"]) for f in frames]
    right = [pose_from_json(f["right"]) for f in frames]
    return PoseTrack(
        root_pos=[f["root"] for f in frames],
        root_yaw=[_read_yaw(f, "frame root") for f in frames],
        left_foot=[p.foot_pos for p in left], left_yaw=[p.yaw for p in left],
        left_toe=[p.toe_pos for p in left],
        right_foot=[p.foot_pos for p in right], right_yaw=[p.yaw for p in right],
        right_toe=[p.toe_pos for p in right],
    )


def clip_from_json(obj) -> StepClip:
    try:
        return StepClip(
            id=str(obj["id"]),
            support=pose_from_json(obj["support"]),
            support_side=side_from_json(obj["support_side"]),
            start_local=pose_from_json(obj["start_local"]),
            end_local=pose_from_json(obj["end_local"]),
            v_root=float(obj["v_root"]),
            label=label_from_json(obj["label"]),
            fps=float(obj["fps"]),
            frames=_track_from_json(obj["frames"]),
        )
    except KeyError as exc:
        raise ValidationError(f"clip payload missing {exc}") from exc


def footprint_to_json(fp: Footprint) -> dict:
    return {"side": side_to_json(fp.side), "pos": _vec(fp.pos), **_yaw_keys(fp.yaw)}


def footprint_from_json(obj) -> Footprint:
    try:
        return Footprint(side_from_json(obj["side"]), obj["pos"], _read_yaw(obj, "footprint"))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad footprint payload: {exc}") from exc


def plan_to_json(plan: FootprintPlan) -> dict:
    return {"footprints": [footprint_to_json(fp) for fp in plan]}


def plan_from_json(obj) -> FootprintPlan:
    prints = obj.get("footprints")
    if not isinstance(prints, list):
        raise ValidationError("plan payload needs a footprints list")
    return FootprintPlan(tuple(footprint_from_json(p) for p in prints))


def motion_to_json(motion: MotionOutput) -> dict:
    t = motion.frames
    return {
        "fps": float(motion.fps),
        "frames": [
            {
                "root": _vec(t.root_pos[i]), **_yaw_keys(t.root_yaw[i]),
                "left": pose_to_json(t.foot_pose(Side.LEFT, i)),
                "right": pose_to_json(t.foot_pose(Side.RIGHT, i)),
                "left_contact": bool(motion.left_contact[i]),
                "right_contact": bool(motion.right_contact[i]),
            }
            for i in range(len(t))
        ],
        "steps": [
            {
                "plan_index": s.plan_index,
                "label": label_to_json(s.label),
                "frame_range": [s.frame_start, s.frame_end],
                "consumed": s.consumed,
            }
            for s in motion.steps
        ],
    }


def motion_from_json(obj) -> MotionOutput:
    frames = obj.get("frames")
    if not frames:
        raise ValidationError("animation payload needs frames")
    return MotionOutput(
        fps=float(obj["fps"]),
        frames=_track_from_json(frames),
        left_contact=[f["left_contact"] for f in frames],
        right_contact=[f["right_contact"] for f in frames],
        steps=tuple(
            StepAnnotation(plan_index=int(s["plan_index"]),
                           label=label_from_json(s["label"]),
                           frame_start=int(s["frame_range"][0]),
                           frame_end=int(s["frame_range"][1]),
                           consumed=int(s.get("consumed", 1)))
            for s in obj.get("steps", ())),
    )
