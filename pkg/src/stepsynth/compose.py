"""End-to-end synthesis: corrected plan -> classifications -> velocity
schedule -> per-step extraction and blending -> concatenated, cleaned motion.

Concatenation keeps the root C0-continuous by offsetting each blended
step's root trajectory onto the previous end and cross-fading root yaw
over a short window; feet need no offsets because every contact is pinned
to its footprint. Contact flags come straight from the pin schedule, so
at each step boundary exactly the new supporting foot is in contact.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .blend import Pin, blend_step, cleanup_footskate, solve_for_selection
from .correct import PlanChange, correct_plan
from .database import MotionDatabase
from .errors import StepSynthError, ValidationError
from .extract import CANDIDATE_CAP, candidate_set, select_enclosure
from .geometry import circular_mean, normalize_yaw, normalize_yaw_array, smoothstep
from .patterns import STAIR_TRIGGER, StepClassification, classify_plan
from .transitions import TransitionGraphSet, schedule_velocities
from .types import (Family, FootprintPlan, MotionOutput, PoseTrack, Side,
                    StepAnnotation, concat_tracks)

_SETTLE_TOL = 1e-6


@dataclass(frozen=True)
class ComposeConfig:
    fps: float = 60.0
    stair_trigger: float = STAIR_TRIGGER
    candidate_cap: int = CANDIDATE_CAP
    root_yaw_blend_s: float = 0.1
    stance_hold_s: float = 0.25
    reject_invalid: bool = False   # raise instead of auto-correcting


@dataclass(frozen=True)
class StepReport:
    plan_index: int
    label: str
    seconds: float
    v_target: float
    foot_clips: tuple[str, ...]
    toe_clips: tuple[str, ...]
    w_foot: tuple[float, ...]
    w_toe: tuple[float, ...]
    v: tuple[float, float]
    residual: float


@dataclass(frozen=True)
class ComposeReport:
    corrections: tuple[PlanChange, ...]
    classifications: tuple[StepClassification, ...]
    schedule: tuple[float, ...]
    corrected_plan: FootprintPlan
    steps: tuple[StepReport, ...] = ()
    total_seconds: float = 0.0


def _analyze(db: MotionDatabase, graphs: TransitionGraphSet | None,
             plan: FootprintPlan, config: ComposeConfig):
    corrected, log, touched = correct_plan(plan, db.limits,
                                           stair_trigger=config.stair_trigger)
    if config.reject_invalid and log:
        raise ValidationError("plan violates database limits and correction "
                              "is disabled")
    classifications = classify_plan(corrected, db, graphs,
                                    stair_trigger=config.stair_trigger)
    classifications = [
        replace(c, corrected=(c.plan_index in touched
                              or (c.consumed == 2 and c.plan_index + 1 in touched)))
        for c in classifications]
    for c in classifications:
        if c.family is Family.UNREACHABLE:
            raise StepSynthError("unreachable step survived correction",
                                 plan_index=c.plan_index)
    schedule, _ = schedule_velocities(classifications, graphs, db.base_velocity)
    return corrected, log, classifications, schedule


def validate(db: MotionDatabase, graphs: TransitionGraphSet | None,
             plan: FootprintPlan,
             config: ComposeConfig = ComposeConfig()) -> ComposeReport:
    """Dry run: corrections, classifications and the velocity schedule."""
    corrected, log, classifications, schedule = _analyze(db, graphs, plan, config)
    return ComposeReport(corrections=tuple(log),
                         classifications=tuple(classifications),
                         schedule=tuple(schedule), corrected_plan=corrected)


def _stance_track(plan: FootprintPlan, db: MotionDatabase, n: int) -> PoseTrack:
    left = plan[0] if plan[0].side is Side.LEFT else plan[1]
    right = plan[1] if plan[0].side is Side.LEFT else plan[0]
    lp = left.to_pose(db.toe_offset)
    rp = right.to_pose(db.toe_offset)
    root = 0.5 * (lp.foot_pos + rp.foot_pos) + np.array([0, db.root_height, 0])
    yaw = circular_mean([lp.yaw, rp.yaw])
    return PoseTrack(
        root_pos=np.tile(root, (n, 1)), root_yaw=np.full(n, yaw),
        left_foot=np.tile(lp.foot_pos, (n, 1)), left_yaw=np.full(n, lp.yaw),
        left_toe=np.tile(lp.toe_pos, (n, 1)),
        right_foot=np.tile(rp.foot_pos, (n, 1)), right_yaw=np.full(n, rp.yaw),
        right_toe=np.tile(rp.toe_pos, (n, 1)))


def _support_departure(track: PoseTrack, side: Side) -> tuple[int, int]:
    """(liftoff, touchdown) frame indexes of a relocating support foot."""
    pos = track.foot_arrays(side)[0]
    moved = np.linalg.norm(pos - pos[0], axis=1) > _SETTLE_TOL
    liftoff = int(np.argmax(moved)) if moved.any() else len(pos)
    settled = np.linalg.norm(pos - pos[-1], axis=1) <= _SETTLE_TOL
    touchdown = len(pos) - 1
    while touchdown > 0 and settled[touchdown - 1]:
        touchdown -= 1
    return liftoff, touchdown


def compose(db: MotionDatabase, graphs: TransitionGraphSet | None,
            plan: FootprintPlan,
            config: ComposeConfig = ComposeConfig()
            ) -> tuple[MotionOutput, ComposeReport]:
    """Synthesize the full motion for a footprint plan."""
    t_total = time.perf_counter()
    corrected, log, classifications, schedule = _analyze(db, graphs, plan, config)
    fps = config.fps
    hold = max(1, int(round(config.stance_hold_s * fps)))
    yaw_blend = max(1, int(round(config.root_yaw_blend_s * fps)))

    tracks = [_stance_track(corrected, db, hold)]
    total_frames = hold
    annotations: list[StepAnnotation] = []
    step_reports: list[StepReport] = []

    cur_index = {corrected[0].side: 0, corrected[1].side: 1}
    cur_pose = {fp.side: fp.to_pose(db.toe_offset) for fp in corrected[:2]}
    # pending contact per side: (pose, plan index, pinned-from frame)
    pending = {fp.side: (fp.to_pose(db.toe_offset), i, 0)
               for i, fp in enumerate(corrected[:2])}
    pins: list[Pin] = []

    def close_pending(side: Side, stop: int):
        pose, _, start = pending[side]
        # a hop re-lifts the foot at the same boundary frame it landed on;
        # pin that single frame so every footprint owns one contact
        pins.append(Pin(side, pose, start, max(stop, start + 1)))

    for cls, v_target in zip(classifications, schedule):
        t_step = time.perf_counter()
        i = cls.plan_index
        fp = corrected[i]
        acting = fp.side
        support_fp = corrected[cur_index[acting.other]]

        candidates = candidate_set(db, support_fp, cls.label, v_target, fp,
                                   cap=config.candidate_cap)
        try:
            selection = select_enclosure(candidates, fp, db.toe_offset,
                                         plan_index=i)
        except StepSynthError as exc:
            exc.plan_index = i
            raise
        solution = solve_for_selection(selection, fp, db.toe_offset)
        step_clip = blend_step(selection, solution, fp, cls.label,
                               start_from=cur_pose[acting],
                               toe_offset=db.toe_offset, clip_id=f"step-{i}")

        seg = step_clip.frames
        prev = tracks[-1]
        start_frame = total_frames - 1  # shared boundary frame

        # root C0 continuity + yaw cross-fade over the blend window
        offset = prev.root_pos[-1] - seg.root_pos[0]
        root_pos = seg.root_pos + offset
        dyaw = normalize_yaw(prev.root_yaw[-1] - seg.root_yaw[0])
        fade = 1.0 - smoothstep(np.arange(len(seg)) / yaw_blend)
        root_yaw = normalize_yaw_array(seg.root_yaw + fade * dyaw)
        seg = replace(seg, root_pos=root_pos, root_yaw=root_yaw)

        # close the acting foot's current contact at the step start
        close_pending(acting, start_frame)
        if cls.consumed == 2:
            # the support foot flies too; its contact ends at its liftoff
            liftoff, touchdown = _support_departure(seg, acting.other)
            close_pending(acting.other, start_frame + liftoff)

        tracks.append(seg.sliced(1, len(seg)))
        total_frames += len(seg) - 1
        end_frame = total_frames
        annotations.append(StepAnnotation(
            plan_index=i, label=cls.label, frame_start=start_frame,
            frame_end=end_frame, consumed=cls.consumed))

        cur_pose[acting] = fp.to_pose(db.toe_offset)
        cur_index[acting] = i
        pending[acting] = (cur_pose[acting], i, end_frame - 1)
        if cls.consumed == 2:
            second = corrected[i + 1]
            cur_pose[second.side] = second.to_pose(db.toe_offset)
            cur_index[second.side] = i + 1
            pending[second.side] = (cur_pose[second.side], i + 1,
                                    start_frame + touchdown)

        sol = solution
        step_reports.append(StepReport(
            plan_index=i, label=cls.label.kind.value,
            seconds=time.perf_counter() - t_step, v_target=float(v_target),
            foot_clips=selection.foot.clip_ids, toe_clips=selection.toe.clip_ids,
            w_foot=tuple(float(w) for w in sol.w_foot),
            w_toe=tuple(float(w) for w in sol.w_toe),
            v=(float(sol.v[0]), float(sol.v[1])), residual=sol.residual))

    for side in (Side.LEFT, Side.RIGHT):
        close_pending(side, total_frames)

    track = concat_tracks(tracks)
    left_contact = np.zeros(total_frames, dtype=bool)
    right_contact = np.zeros(total_frames, dtype=bool)
    for pin in pins:
        flags = left_contact if pin.side is Side.LEFT else right_contact
        flags[pin.start:pin.stop] = True
    motion = MotionOutput(fps=fps, frames=track, left_contact=left_contact,
                          right_contact=right_contact, steps=tuple(annotations))
    motion = cleanup_footskate(motion, pins)

    report = ComposeReport(
        corrections=tuple(log), classifications=tuple(classifications),
        schedule=tuple(schedule), corrected_plan=corrected,
        steps=tuple(step_reports),
        total_seconds=time.perf_counter() - t_total)
    return motion, report


def report_to_json(report: ComposeReport) -> dict:
    from .formats import plan_to_json
    from .patterns import classification_to_json

    return {
        "corrections": [c.to_json() for c in report.corrections],
        "classifications": [classification_to_json(c)
                            for c in report.classifications],
        "schedule": list(report.schedule),
        "corrected_plan": plan_to_json(report.corrected_plan),
        "steps": [
            {"plan_index": s.plan_index, "label": s.label, "seconds": s.seconds,
             "v_target": s.v_target, "foot_clips": list(s.foot_clips),
             "toe_clips": list(s.toe_clips), "w_foot": list(s.w_foot),
             "w_toe": list(s.w_toe), "v": list(s.v), "residual": s.residual}
            for s in report.steps],
        "total_seconds": report.total_seconds,
    }
