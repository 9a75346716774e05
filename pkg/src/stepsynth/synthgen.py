"""Parametric generator of synthetic step clips and transition sequences.

Stands in for a mocap corpus: every generated quantity (distance bands,
swing profiles, velocity ramps) is known by construction, so tests can
treat the generator as ground truth. Distance bands deliberately overlap
between walking/running and running/jumping so the look-ahead and limit
stitching logic has real work to do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandViolation, ValidationError
from .geometry import lerp_yaw, normalize_yaw, raised_cosine, rot_y
from .transforms import to_global
from .types import (JUMP_KINDS, RUNNING, STAIR_STEP, WALKING, BehaviourKind,
                    BehaviourLabel, Family, FootPose, PoseTrack, Side,
                    StepClip, foot_pose)

# Plane-travel bands per family, meters. Walk/run and run/jump overlap on
# purpose: [0.7, 0.9] and [1.4, 1.6] are the ambiguity regions.
DEFAULT_BANDS: dict[Family, tuple[float, float]] = {
    Family.WALKING: (0.3, 0.9),
    Family.RUNNING: (0.7, 1.6),
    Family.JUMPING: (1.4, 2.6),
    Family.STAIR: (0.25, 0.5),
}

# Swing apex height per family, meters (stairs scale with the rise).
SWING_PEAKS = {Family.WALKING: 0.06, Family.RUNNING: 0.12,
               Family.JUMPING: 0.35, Family.STAIR: 0.08}

BASE_VROOT = {Family.WALKING: 1.2, Family.RUNNING: 2.7,
              Family.JUMPING: 3.2, Family.STAIR: 0.8}

DEFAULT_COUNTS = {Family.WALKING: 100, Family.RUNNING: 50,
                  Family.JUMPING: 100, Family.STAIR: 50}

STANCE_WIDTH = 0.2   # lateral distance between feet in a neutral stance
ROOT_HEIGHT = 0.95
TOE_OFFSET = 0.15
STAGGER = 0.4        # fore-aft offset of a one-foot lift/land stance


def _swing_height(family: Family, rise: float) -> float:
    if family is Family.STAIR:
        return 0.5 * max(rise, 0.0) + SWING_PEAKS[Family.STAIR]
    return SWING_PEAKS[family]


def gen_step(label: BehaviourLabel, support_side: Side, start_local: FootPose,
             end_local: FootPose, v_root: float, fps: float = 60.0, *,
             clip_id: str = "synth", toe_offset: float = TOE_OFFSET,
             support_end_local: FootPose | None = None,
             band: tuple[float, float] | None = None) -> StepClip:
    """Generate one step clip in the canonical frame (support at the origin).

    The acting foot follows a raised-cosine swing from ``start_local`` to
    ``end_local``; the supporting foot stays planted unless
    ``support_end_local`` asks for a jump-style support relocation, and the
    root advances at constant ``v_root`` along the step direction.
    """
    family = label.family
    if band is None:
        band = DEFAULT_BANDS[family]
    travel = math.hypot(end_local.foot_pos[0] - start_local.foot_pos[0],
                        end_local.foot_pos[2] - start_local.foot_pos[2])
    if travel > 1e-12 and not (band[0] - 1e-9 <= travel <= band[1] + 1e-9):
        raise BandViolation(
            f"{family.value} travel {travel:.3f} m outside band {band}")
    if v_root < 0:
        raise ValidationError("v_root must be non-negative")
    if support_end_local is not None and label.kind not in JUMP_KINDS:
        raise ValidationError("only jump clips may relocate the support foot")

    support = foot_pose((0.0, 0.0, 0.0), 0.0, toe_offset)
    start = to_global(start_local, support)
    end = to_global(end_local, support)

    duration = travel / v_root if v_root > 1e-9 and travel > 1e-12 else 0.5
    n = max(2, int(round(duration * fps)) + 1)
    tau = np.linspace(0.0, 1.0, n)
    s = np.asarray(raised_cosine(tau))

    def _swing(p0: FootPose, p1: FootPose, peak: float, phase: np.ndarray):
        pos = p0.foot_pos + phase[:, None] * (p1.foot_pos - p0.foot_pos)
        bump = peak * 0.5 * (1.0 - np.cos(2.0 * np.pi * np.clip(phase, 0, 1)))
        pos = pos + bump[:, None] * np.array([0.0, 1.0, 0.0])
        yaw = np.array([lerp_yaw(p0.yaw, p1.yaw, t) for t in phase])
        toe = pos + np.stack([rot_y(np.array([0.0, 0.0, toe_offset]), y) for y in yaw])
        return pos, yaw, toe

    peak = _swing_height(family, end.foot_pos[1] - start.foot_pos[1])
    if start_local == end_local:
        peak = 0.0  # degenerate step: the acting foot never leaves the ground
    act_pos, act_yaw, act_toe = _swing(start, end, peak, s)

    if support_end_local is None:
        sup_pos = np.tile(support.foot_pos, (n, 1))
        sup_yaw = np.full(n, support.yaw)
        sup_toe = np.tile(support.toe_pos, (n, 1))
    else:
        # Jump flight: the support foot lifts and re-lands too. Short planted
        # pads at both ends keep its contact runs detectable.
        sup_end = to_global(support_end_local, support)
        pad = 0.15
        phase = np.clip((tau - pad) / (1.0 - 2.0 * pad), 0.0, 1.0)
        phase = np.asarray(raised_cosine(phase))
        sup_pos, sup_yaw, sup_toe = _swing(support, sup_end, peak, phase)

    direction = end.foot_pos - start.foot_pos
    plane = math.hypot(direction[0], direction[2])
    if plane > 1e-12:
        direction = np.array([direction[0], 0.0, direction[2]]) / plane
    else:
        direction = np.array([0.0, 0.0, 1.0])
    root0 = 0.5 * (support.foot_pos + start.foot_pos) + np.array([0, ROOT_HEIGHT, 0])
    t_axis = np.arange(n) / fps
    root_pos = root0 + v_root * t_axis[:, None] * direction
    root_yaw = np.array([lerp_yaw(support.yaw, end.yaw, t) for t in s])

    if support_side is Side.LEFT:
        left = (sup_pos, sup_yaw, sup_toe)
        right = (act_pos, act_yaw, act_toe)
    else:
        left = (act_pos, act_yaw, act_toe)
        right = (sup_pos, sup_yaw, sup_toe)

    frames = PoseTrack(root_pos=root_pos, root_yaw=root_yaw,
                       left_foot=left[0], left_yaw=left[1], left_toe=left[2],
                       right_foot=right[0], right_yaw=right[1], right_toe=right[2])
    return StepClip(id=clip_id, support=support, support_side=support_side,
                    start_local=start_local, end_local=end_local,
                    v_root=float(v_root), label=label, fps=float(fps), frames=frames)


def _jump_geometry(kind: BehaviourKind, rng, side_sign: float, travel: float,
                   toe_offset: float):
    """Start/end stances implementing the four local jump patterns.

    Side-by-side stances put the acting foot laterally beside the support;
    staggered stances push it ~STAGGER behind (lift) or drag the support
    behind the landing (land).
    """
    both_lift = kind in (BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND,
                         BehaviourKind.JUMP_BOTH_LIFT_ONE_LAND)
    both_land = kind in (BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND,
                         BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND)
    lat = side_sign * (STANCE_WIDTH + rng.uniform(-0.02, 0.02))
    z0 = rng.uniform(-0.05, 0.05) if both_lift else -(STAGGER + rng.uniform(-0.15, 0.15))
    start = foot_pose((lat, 0.0, z0), rng.uniform(-0.05, 0.05), toe_offset)

    phi = rng.uniform(-0.3, 0.3)
    end_xz = start.foot_pos + travel * np.array([math.sin(phi), 0.0, math.cos(phi)])
    end = foot_pose(end_xz, rng.uniform(-0.25, 0.25), toe_offset)

    dz = rng.uniform(-0.05, 0.05) if both_land else -(STAGGER + rng.uniform(-0.05, 0.05))
    sup_end = foot_pose(end.foot_pos + np.array([-lat, 0.0, dz]),
                        rng.uniform(-0.05, 0.05), toe_offset)
    return start, end, sup_end


def gen_database(counts: dict[Family, int] | None = None, seed: int = 0, *,
                 fps: float = 60.0, toe_offset: float = TOE_OFFSET,
                 bands: dict[Family, tuple[float, float]] | None = None,
                 mirror: bool = True) -> list[StepClip]:
    """Deterministic synthetic corpus; default scale is 300 clips + mirrors."""
    from .database import mirror_clip

    counts = dict(DEFAULT_COUNTS if counts is None else counts)
    bands = dict(DEFAULT_BANDS if bands is None else bands)
    rng = np.random.default_rng(seed)
    clips: list[StepClip] = []

    jump_kinds = sorted(JUMP_KINDS, key=lambda k: k.value)
    for family in (Family.WALKING, Family.RUNNING, Family.JUMPING, Family.STAIR):
        lo, hi = bands[family]
        for i in range(counts.get(family, 0)):
            support_side = Side.RIGHT
            sign = support_side.other.lateral_sign  # acting foot lateral sign
            # first two clips pin the exact band edges so a raw-limit rescan
            # reproduces the configured band, the rest sample uniformly
            travel = lo if i == 0 else hi if i == 1 else rng.uniform(lo, hi)
            v_root = max(0.2, BASE_VROOT[family] + rng.normal(0.0, 0.1))
            sup_end = None
            if family is Family.JUMPING:
                kind = jump_kinds[i % len(jump_kinds)]
                start, end, sup_end = _jump_geometry(kind, rng, sign, travel, toe_offset)
                lead = (support_side if kind is BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND
                        else support_side.other)
                label = BehaviourLabel(kind, lead)
            else:
                label = {Family.WALKING: WALKING, Family.RUNNING: RUNNING,
                         Family.STAIR: STAIR_STEP}[family]
                lat = sign * (STANCE_WIDTH + rng.uniform(-0.02, 0.02))
                # the start offset spans the whole stride so end stances
                # cover everything from standing starts (land a full travel
                # ahead of the support) to passing steps (land level with it)
                start = foot_pose((lat, 0.0, -rng.uniform(-0.05, 1.05) * travel),
                                  rng.uniform(-0.05, 0.05), toe_offset)
                phi = rng.uniform(-0.35, 0.35)
                rise = rng.uniform(0.08, 0.3) if family is Family.STAIR else 0.0
                end_xz = start.foot_pos + travel * np.array(
                    [math.sin(phi), 0.0, math.cos(phi)]) + np.array([0.0, rise, 0.0])
                end = foot_pose(end_xz, rng.uniform(-0.25, 0.25), toe_offset)
            clip = gen_step(label, support_side, start, end, v_root, fps,
                            clip_id=f"{family.value}-{i:03d}",
                            toe_offset=toe_offset, support_end_local=sup_end,
                            band=bands[family])
            clips.append(clip)
            if mirror:
                clips.append(mirror_clip(clip, clip_id=f"{family.value}-{i:03d}m"))
    return clips


@dataclass(frozen=True)
class TransitionSequence:
    """Multi-step labeled sequence whose per-step root velocities are known."""

    from_family: Family
    to_family: Family
    fps: float
    frames: PoseTrack
    true_velocities: tuple[float, ...]


def gen_transition_sequence(from_family: Family, to_family: Family,
                            velocities, fps: float = 60.0, *,
                            frames_per_step: int = 48,
                            toe_offset: float = TOE_OFFSET) -> TransitionSequence:
    """Sequence of steps whose root follows the given per-step velocity ramp.

    Swing feet land exactly on step boundaries and stances are planted
    bit-exactly, so contact detection recovers the step segmentation and
    the measured per-step velocities match ``velocities`` closely.
    """
    velocities = tuple(float(v) for v in velocities)
    if len(velocities) < 2:
        raise ValidationError("a transition sequence needs at least 2 steps")
    n_steps = len(velocities)
    F = frames_per_step
    n = n_steps * F + 1
    dt = 1.0 / fps

    root_z = np.zeros(n)
    k = 0
    for v in velocities:
        for _ in range(F):
            root_z[k + 1] = root_z[k] + v * dt
            k += 1
    root_pos = np.stack([np.zeros(n), np.full(n, ROOT_HEIGHT), root_z], axis=1)

    feet = {Side.LEFT: np.zeros((n, 3)), Side.RIGHT: np.zeros((n, 3))}
    feet[Side.LEFT][:, 0] = Side.LEFT.lateral_sign * STANCE_WIDTH / 2
    feet[Side.RIGHT][:, 0] = Side.RIGHT.lateral_sign * STANCE_WIDTH / 2
    pos_z = {Side.LEFT: 0.0, Side.RIGHT: 0.0}
    for i in range(n_steps):
        swing = Side.LEFT if i % 2 == 0 else Side.RIGHT
        stance = swing.other
        a, b = i * F, (i + 1) * F
        target = root_z[b] + 0.1  # land slightly ahead of the root
        start_z = pos_z[swing]
        tau = np.clip((np.arange(n) - (a + 0.2 * F)) / (0.8 * F), 0.0, 1.0)
        phase = np.asarray(raised_cosine(tau[a:b + 1]))
        feet[swing][a:b + 1, 2] = start_z + phase * (target - start_z)
        feet[swing][a:b + 1, 1] = 0.08 * 0.5 * (1 - np.cos(2 * np.pi * phase))
        feet[swing][b + 1:, 2] = target
        feet[stance][a:b + 1, 2] = pos_z[stance]
        feet[stance][b + 1:, 2] = pos_z[stance]
        pos_z[swing] = target

    yaw0 = np.zeros(n)
    toe = np.array([0.0, 0.0, toe_offset])
    track = PoseTrack(
        root_pos=root_pos, root_yaw=yaw0,
        left_foot=feet[Side.LEFT], left_yaw=yaw0, left_toe=feet[Side.LEFT] + toe,
        right_foot=feet[Side.RIGHT], right_yaw=yaw0, right_toe=feet[Side.RIGHT] + toe)
    return TransitionSequence(from_family, to_family, fps, track, velocities)
