"""Blend-weight solving and step blending.

Weights come in two layers: per-joint barycentric weights place the foot
polygon's blend exactly on the foot target (likewise toe), then a single
(v1, v2) pair combines the foot-driven and toe-driven blends by least
squares over the eight vertex/target rows. The affine constraint
v1 + v2 = 1 is enforced by elimination, which keeps the weight-sum
invariant exact instead of approximating it with a soft matrix row.

Hitting both the foot and toe points of a footprint pins its yaw as well:
orientation is never blended toward a target directly, it emerges from the
two position constraints, with the residual removed by an eased warp over
the swing (the step-level share of footskate cleanup).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import (DegenerateVertices, OverlappingPins, RankDeficient,
                     ValidationError)
from .extract import EnclosureSelection
from .geometry import normalize_yaw, normalize_yaw_array, smoothstep
from .transforms import to_global, to_local
from .types import (BehaviourLabel, FootPose, Footprint, MotionOutput,
                    PoseTrack, Side, StepClip)

NEGATIVE_WEIGHT_FLOOR = -0.05
CLEANUP_WINDOW_S = 0.15


@dataclass(frozen=True)
class BlendSolution:
    w_foot: np.ndarray  # (4,) foot-polygon weights, sum 1
    w_toe: np.ndarray   # (4,) toe-polygon weights, sum 1
    v: np.ndarray       # (2,) joint combination weights, sum 1
    residual: float     # stacked least-squares objective at the solution

    def __post_init__(self):
        for name in ("w_foot", "w_toe", "v"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.residual < 0:
            raise ValidationError("residual must be non-negative")


def _plane(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] == 3:
        return pts[..., [0, 2]]
    return pts


def solve_position_weights(vertex_positions, target) -> np.ndarray:
    """Affine weights over 4 vertices reproducing the target on the ground plane.

    The 3x4 constraint system (x, z, sum-to-one) is solved by pseudo-inverse,
    i.e. the minimum-norm member of the one-parameter solution family. Near
    the polygon boundary that solution can extrapolate slightly; anything
    below the -0.05 floor falls back to barycentric weights of a containing
    triangle with the fourth weight zeroed.
    """
    pts = _plane(vertex_positions)
    if pts.shape != (4, 2):
        raise ValidationError(f"need 4 vertices, got {pts.shape}")
    tgt = _plane(np.asarray(target, dtype=np.float64))

    A = np.vstack([pts[:, 0], pts[:, 1], np.ones(4)])
    if np.linalg.matrix_rank(A, tol=1e-10) < 3:
        raise DegenerateVertices("polygon vertices are collinear on the ground plane")
    b = np.array([tgt[0], tgt[1], 1.0])
    w = np.linalg.pinv(A) @ b

    if np.min(w) < NEGATIVE_WEIGHT_FLOOR:
        fallback = _triangle_split(pts, tgt)
        if fallback is not None:
            return fallback
    return w


def _triangle_split(pts: np.ndarray, tgt: np.ndarray) -> np.ndarray | None:
    """Barycentric weights of the containing triangle, fourth vertex zeroed."""
    best = None
    for tri in itertools.combinations(range(4), 3):
        M = np.vstack([pts[list(tri), 0], pts[list(tri), 1], np.ones(3)])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        bary = np.linalg.solve(M, np.array([tgt[0], tgt[1], 1.0]))
        margin = float(np.min(bary))
        if margin >= -1e-9 and (best is None or margin > best[0]):
            w = np.zeros(4)
            w[list(tri)] = bary
            best = (margin, w)
    return None if best is None else best[1]


def solve_joint_weights(foot_points, toe_points, targets) -> tuple[np.ndarray, float]:
    """(v1, v2) combining the foot and toe columns to hit each row's target.

    Rows are the eight selected example motions: per row, v1 times its end
    foot position plus v2 times its end toe position should reproduce that
    row's target point. v2 is eliminated through v1 + v2 = 1 and the
    remaining column solved by pseudo-inverse; the returned residual is the
    2-norm of the stacked row errors at the solution.
    """
    f = _plane(foot_points)
    t = _plane(toe_points)
    tgt = _plane(targets)
    if not (f.shape == t.shape == tgt.shape):
        raise ValidationError("row shapes must agree")
    d = (f - t).reshape(-1)
    rhs = (tgt - t).reshape(-1)
    scale = max(np.max(np.abs(f)), np.max(np.abs(t)), 1.0)
    if np.linalg.norm(d) <= 1e-9 * scale:
        raise RankDeficient("foot and toe columns coincide; extraction degenerate")
    v1 = (np.linalg.pinv(d[:, None]) @ rhs).item()
    v = np.array([v1, 1.0 - v1])
    residual = float(np.linalg.norm(v1 * d - rhs))
    return v, residual


def solve_for_selection(selection: EnclosureSelection, target: Footprint,
                        toe_offset: float) -> BlendSolution:
    """Full Eq-style weight solve for one selected enclosure pair."""
    foot_target = target.pos
    toe_target = target.toe_target(toe_offset)
    w_foot = solve_position_weights(selection.foot.positions, foot_target)
    w_toe = solve_position_weights(selection.toe.positions, toe_target)

    def end_pose(clip: StepClip) -> FootPose:
        return to_global(clip.end_local, clip.support)

    foot_col, toe_col, tgt_rows = [], [], []
    for clip, pos in zip(selection.foot.clips, selection.foot.positions):
        foot_col.append(pos)
        toe_col.append(end_pose(clip).toe_pos)
        tgt_rows.append(foot_target)
    for clip, pos in zip(selection.toe.clips, selection.toe.positions):
        foot_col.append(end_pose(clip).foot_pos)
        toe_col.append(pos)
        tgt_rows.append(toe_target)
    v, residual = solve_joint_weights(np.array(foot_col), np.array(toe_col),
                                      np.array(tgt_rows))
    return BlendSolution(w_foot=w_foot, w_toe=w_toe, v=v, residual=residual)


def _resample_track(track: PoseTrack, m: int) -> PoseTrack:
    n = len(track)
    if n == m:
        return track
    x_old = np.arange(n, dtype=np.float64)
    x_new = np.linspace(0.0, n - 1.0, m)

    def pos(a):
        return np.stack([np.interp(x_new, x_old, a[:, k]) for k in range(3)], axis=1)

    def yaw(a):
        return normalize_yaw_array(np.interp(x_new, x_old, np.unwrap(a)))

    return PoseTrack(
        root_pos=pos(track.root_pos), root_yaw=yaw(track.root_yaw),
        left_foot=pos(track.left_foot), left_yaw=yaw(track.left_yaw),
        left_toe=pos(track.left_toe),
        right_foot=pos(track.right_foot), right_yaw=yaw(track.right_yaw),
        right_toe=pos(track.right_toe))


def _circular_blend(yaws: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted angular mean per frame; yaws is (n_clips, M)."""
    s = weights @ np.sin(yaws)
    c = weights @ np.cos(yaws)
    return np.arctan2(s, c)


def blend_step(selection: EnclosureSelection, weights: BlendSolution,
               target: Footprint, label: BehaviourLabel, *,
               start_from: FootPose | None = None,
               toe_offset: float = 0.15, clip_id: str = "blend") -> StepClip:
    """Combine the eight selected clips into one step hitting the footprint.

    Positions blend linearly under the composite per-clip weights
    (v1 * w_foot, v2 * w_toe); yaws blend as a weighted angular mean. The
    residual between the blended end pose and the footprint (and, when
    ``start_from`` is given, between the blended start and the acting
    foot's true pose) is warped away with a C1 ease over the swing, so the
    final contact lands on the footprint exactly.
    """
    clips = list(selection.foot.clips) + list(selection.toe.clips)
    support = clips[0].support
    for c in clips[1:]:
        if (np.max(np.abs(c.support.foot_pos - support.foot_pos)) > 1e-9
                or abs(normalize_yaw(c.support.yaw - support.yaw)) > 1e-9):
            raise ValidationError("selected clips are not aligned to one support")

    m = int(round(float(np.median([c.n_frames for c in clips]))))
    m = max(m, 2)
    tracks = [_resample_track(c.frames, m) for c in clips]
    w8 = np.concatenate([weights.v[0] * weights.w_foot,
                         weights.v[1] * weights.w_toe])

    def blend_pos(field: str) -> np.ndarray:
        stacked = np.stack([getattr(t, field) for t in tracks])  # (8, M, 3)
        return np.einsum("c,cmk->mk", w8, stacked)

    def blend_yaw(field: str) -> np.ndarray:
        stacked = np.stack([getattr(t, field) for t in tracks])  # (8, M)
        return _circular_blend(stacked, w8)

    blended = PoseTrack(
        root_pos=blend_pos("root_pos"), root_yaw=blend_yaw("root_yaw"),
        left_foot=blend_pos("left_foot"), left_yaw=blend_yaw("left_yaw"),
        left_toe=blend_pos("left_toe"),
        right_foot=blend_pos("right_foot"), right_yaw=blend_yaw("right_yaw"),
        right_toe=blend_pos("right_toe"))

    acting = clips[0].acting_side
    blended = _anchor_acting_foot(blended, acting, target.to_pose(toe_offset),
                                  start_from)

    v_root = float(np.dot(w8, [c.v_root for c in clips]))
    first = blended.foot_pose(acting, 0)
    last = blended.foot_pose(acting, m - 1)
    return StepClip(
        id=clip_id, support=support, support_side=clips[0].support_side,
        start_local=to_local(first, support), end_local=to_local(last, support),
        v_root=v_root, label=label, fps=clips[0].fps, frames=blended)


def _anchor_acting_foot(track: PoseTrack, acting: Side, end_target: FootPose,
                        start_from: FootPose | None) -> PoseTrack:
    """Warp the acting-foot channels so the swing docks exactly at both ends."""
    m = len(track)
    foot, yaw, toe = track.foot_arrays(acting)
    ease = np.asarray(smoothstep(np.linspace(0.0, 1.0, m)))[:, None]

    d_end_foot = end_target.foot_pos - foot[-1]
    d_end_toe = end_target.toe_pos - toe[-1]
    d_end_yaw = normalize_yaw(end_target.yaw - yaw[-1])
    new_foot = foot + ease * d_end_foot
    new_toe = toe + ease * d_end_toe
    new_yaw = yaw + ease[:, 0] * d_end_yaw
    if start_from is not None:
        fade = 1.0 - ease
        new_foot = new_foot + fade * (start_from.foot_pos - foot[0])
        new_toe = new_toe + fade * (start_from.toe_pos - toe[0])
        new_yaw = new_yaw + fade[:, 0] * normalize_yaw(start_from.yaw - yaw[0])
    new_yaw = normalize_yaw_array(new_yaw)

    channels = {f: getattr(track, f) for f in PoseTrack.__dataclass_fields__}
    prefix = "left" if acting is Side.LEFT else "right"
    channels[f"{prefix}_foot"] = new_foot
    channels[f"{prefix}_yaw"] = new_yaw
    channels[f"{prefix}_toe"] = new_toe
    return PoseTrack(**channels)


@dataclass(frozen=True)
class Pin:
    """One foot held at a footprint pose over [start, stop) frames."""

    side: Side
    pose: FootPose
    start: int
    stop: int

    def __post_init__(self):
        if self.stop <= self.start:
            raise ValidationError("pin range must be non-empty")


def cleanup_footskate(motion: MotionOutput, pins: list[Pin]) -> MotionOutput:
    """Remove foot sliding: hold each pinned pose bit-exactly over its
    contact range and ease the corrections in and out over 0.15 s windows.

    Ease-window corrections from different pins superpose; inside a contact
    range the pose is assigned, not accumulated.
    """
    window = max(1, int(round(CLEANUP_WINDOW_S * motion.fps)))
    n = len(motion.frames)
    by_side: dict[Side, list[Pin]] = {Side.LEFT: [], Side.RIGHT: []}
    for pin in pins:
        by_side[pin.side].append(pin)
    for side, side_pins in by_side.items():
        side_pins.sort(key=lambda p: p.start)
        for a, b in zip(side_pins, side_pins[1:]):
            if b.start < a.stop:
                raise OverlappingPins(
                    f"{side.value} pins [{a.start},{a.stop}) and "
                    f"[{b.start},{b.stop}) overlap")

    channels = {f: np.array(getattr(motion.frames, f))
                for f in PoseTrack.__dataclass_fields__}

    for side, side_pins in by_side.items():
        if not side_pins:
            continue
        prefix = "left" if side is Side.LEFT else "right"
        foot = channels[f"{prefix}_foot"]
        yaw = channels[f"{prefix}_yaw"]
        toe = channels[f"{prefix}_toe"]
        orig_foot, orig_yaw, orig_toe = foot.copy(), yaw.copy(), toe.copy()
        for pin in side_pins:
            s, e = max(pin.start, 0), min(pin.stop, n)
            d_foot_in = pin.pose.foot_pos - orig_foot[s]
            d_toe_in = pin.pose.toe_pos - orig_toe[s]
            d_yaw_in = normalize_yaw(pin.pose.yaw - orig_yaw[s])
            lo = max(s - window, 0)
            if lo < s:
                ramp = np.asarray(smoothstep(
                    (np.arange(lo, s) - (s - window)) / window))
                foot[lo:s] += ramp[:, None] * d_foot_in
                toe[lo:s] += ramp[:, None] * d_toe_in
                yaw[lo:s] += ramp * d_yaw_in
            d_foot_out = pin.pose.foot_pos - orig_foot[e - 1]
            d_toe_out = pin.pose.toe_pos - orig_toe[e - 1]
            d_yaw_out = normalize_yaw(pin.pose.yaw - orig_yaw[e - 1])
            hi = min(e + window, n)
            if e < hi:
                ramp = np.asarray(smoothstep(
                    ((e - 1 + window) - np.arange(e, hi)) / window))
                foot[e:hi] += ramp[:, None] * d_foot_out
                toe[e:hi] += ramp[:, None] * d_toe_out
                yaw[e:hi] += ramp * d_yaw_out
        for pin in side_pins:
            s, e = max(pin.start, 0), min(pin.stop, n)
            foot[s:e] = pin.pose.foot_pos
            toe[s:e] = pin.pose.toe_pos
            yaw[s:e] = pin.pose.yaw
        channels[f"{prefix}_yaw"] = normalize_yaw_array(yaw)

    return replace(motion, frames=PoseTrack(**channels))
