import json
import math

import numpy as np
import pytest

from stepsynth.errors import ValidationError
from stepsynth.formats import (clip_from_json, clip_to_json, footprint_from_json,
                               footprint_to_json, motion_from_json, motion_to_json,
                               plan_from_json, plan_to_json, pose_from_json,
                               pose_to_json, to_canonical_json)
from stepsynth.types import (Footprint, FootprintPlan, MotionOutput, Side,
                             StepAnnotation, WALKING, foot_pose)


def test_pose_round_trip_is_bit_exact():
    p = foot_pose((0.1 + 0.2, -1.0 / 3.0, math.pi), 2.5000000001)
    q = pose_from_json(pose_to_json(p))
    assert q == p  # FootPose equality is array_equal, i.e. bit-level


def test_pose_accepts_degrees_with_explicit_key():
    obj = {"foot": [0, 0, 0], "yaw_deg": 90.0, "toe": [0, 0, 0.15]}
    assert pose_from_json(obj).yaw == pytest.approx(math.pi / 2)


def test_pose_prefers_radians_over_degrees():
    obj = {"foot": [0, 0, 0], "yaw_rad": 0.25, "yaw_deg": 90.0,
           "toe": [0, 0, 0.15]}
    assert pose_from_json(obj).yaw == 0.25


def test_pose_requires_some_yaw_key():
    with pytest.raises(ValidationError):
        pose_from_json({"foot": [0, 0, 0], "toe": [0, 0, 0.15]})


def test_clip_round_trip_field_by_field(corpus_small):
    for clip in corpus_small[:6]:
        again = clip_from_json(json.loads(to_canonical_json(clip_to_json(clip))))
        assert again == clip


def test_plan_round_trip():
    plan = FootprintPlan((
        Footprint(Side.LEFT, (-0.1, 0.0, 0.0), 0.0),
        Footprint(Side.RIGHT, (0.1, 0.0, 0.0), -0.1),
        Footprint(Side.LEFT, (-0.1, 0.05, 0.6), math.pi),
    ))
    again = plan_from_json(json.loads(to_canonical_json(plan_to_json(plan))))
    assert again == plan


def test_footprint_degree_input():
    fp = footprint_from_json({"side": "left", "pos": [1, 0, 2], "yaw_deg": -45.0})
    assert fp.yaw == pytest.approx(-math.pi / 4)
    assert footprint_from_json(footprint_to_json(fp)) == fp


def test_motion_round_trip(corpus_small):
    clip = corpus_small[0]
    motion = MotionOutput(
        fps=clip.fps, frames=clip.frames,
        left_contact=np.zeros(len(clip.frames), dtype=bool),
        right_contact=np.ones(len(clip.frames), dtype=bool),
        steps=(StepAnnotation(2, WALKING, 0, len(clip.frames)),))
    again = motion_from_json(json.loads(to_canonical_json(motion_to_json(motion))))
    assert again.fps == motion.fps
    assert again.frames == motion.frames
    assert np.array_equal(again.left_contact, motion.left_contact)
    assert np.array_equal(again.right_contact, motion.right_contact)
    assert again.steps == motion.steps


def test_canonical_json_is_deterministic():
    payload = {"b": 1.0, "a": [1e-17, 0.30000000000000004]}
    assert to_canonical_json(payload) == to_canonical_json(json.loads(
        to_canonical_json(payload)))


def test_plan_payload_errors():
    with pytest.raises(ValidationError):
        plan_from_json({})
    with pytest.raises(ValidationError):
        footprint_from_json({"side": "up", "pos": [0, 0, 0], "yaw_rad": 0})
