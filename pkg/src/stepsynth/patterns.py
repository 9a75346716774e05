"""Footprint pattern classification.

Global patterns pick the behaviour family from the acting foot's travel
distance (or the height gain for stairs); local patterns discriminate the
four jump variants from the lift/land stance angles and inter-foot
distances; the look-ahead pass disambiguates steps that fall where two
families' raw distance bands intersect by inspecting the next few steps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .database import MotionDatabase, BehaviourLimits, overlap_region, stance_angle
from .errors import AmbiguousPattern, ValidationError
from .geometry import normalize_yaw, plane_distance, rot_y
from .types import (BehaviourKind, BehaviourLabel, Family, Footprint,
                    FootprintPlan, RUNNING, STAIR_STEP, Side, WALKING)

STAIR_TRIGGER = 0.04        # height gain above foot-lift noise, meters
DEFAULT_LOOKAHEAD = 4       # steps, matches the walk-to-run transition graph
_BAND_TOL = 1e-9            # matches the corrector's violation tolerance


@dataclass(frozen=True)
class JumpPattern:
    theta_lift: float
    theta_land: float
    travel: float
    lead_side: Side | None

    def __post_init__(self):
        if self.travel < 0:
            raise ValidationError("travel must be non-negative")


@dataclass(frozen=True)
class StepClassification:
    plan_index: int
    family: Family
    label: BehaviourLabel | None    # None only when unreachable
    consumed: int = 1
    long_step: bool = False
    corrected: bool = False
    jump: JumpPattern | None = None


def classify_global(d: float, dy: float, limits: BehaviourLimits, *,
                    stair_trigger: float = STAIR_TRIGGER) -> Family:
    """Family from step distance and height gain against stitched limits."""
    if d < 0:
        raise ValidationError("distance must be non-negative")
    if dy > stair_trigger:
        return Family.STAIR
    if d <= limits.walking.hi + _BAND_TOL:
        return Family.WALKING
    if d <= limits.running.hi + _BAND_TOL:
        return Family.RUNNING
    if d <= limits.jumping.hi + _BAND_TOL:
        return Family.JUMPING
    return Family.UNREACHABLE


def classify_jump(prints: tuple[Footprint, Footprint, Footprint | None],
                  support_before: Footprint,
                  limits: BehaviourLimits) -> tuple[JumpPattern, BehaviourLabel, int]:
    """Jump variant from lift/land stance geometry.

    ``prints`` is (acting start print, landing print, following print or
    None). Lift simultaneity needs the pre-jump stance angle within the
    lift threshold and the stance feet within d_feet_max; landing likewise
    over the landing print pair. Returns the pattern, the label and how
    many plan footprints the jump consumes (2 when both feet land at once).
    """
    start, landing, following = prints

    theta_lift = stance_angle(support_before.pos, support_before.yaw, start.pos)
    d_lift = plane_distance(support_before.pos, start.pos)
    both_lift = (abs(theta_lift) <= limits.theta_thres_lift
                 and d_lift <= limits.d_feet_max)

    pair = following if (following is not None
                         and following.side is landing.side.other) else None
    if pair is not None:
        _check_crossing(landing, pair, limits)
        theta_land = stance_angle(landing.pos, landing.yaw, pair.pos)
        d_land = plane_distance(landing.pos, pair.pos)
        both_land = (abs(theta_land) <= limits.theta_thres_land
                     and d_land <= limits.d_feet_max)
    else:
        theta_land = np.pi / 2  # no pair: maximally staggered by definition
        both_land = False

    if both_lift and both_land:
        kind = BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND
    elif both_lift:
        kind = BehaviourKind.JUMP_BOTH_LIFT_ONE_LAND
    elif both_land:
        kind = BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND
    else:
        kind = BehaviourKind.JUMP_ONE_LIFT_ONE_LAND

    if kind is BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND:
        # staggered lift: the leading foot is the one ahead in the stance
        rel = rot_y(start.pos - support_before.pos, -support_before.yaw)
        lead = start.side if rel[2] > 0 else support_before.side
    else:
        lead = landing.side  # first print on the ground after flight
    consumed = 2 if both_land else 1
    pattern = JumpPattern(theta_lift=theta_lift, theta_land=theta_land,
                          travel=plane_distance(start.pos, landing.pos),
                          lead_side=lead)
    return pattern, BehaviourLabel(kind, lead), consumed


def _check_crossing(landing: Footprint, pair: Footprint,
                    limits: BehaviourLimits) -> None:
    # measured in the first-landed print's frame (the post-land support)
    left = landing if landing.side is Side.LEFT else pair
    right = pair if landing.side is Side.LEFT else landing
    rel = rot_y(left.pos - right.pos, -landing.yaw)
    opposing = abs(normalize_yaw(left.yaw - right.yaw)) > np.pi / 2
    if rel[0] > limits.d_feet_max and opposing:
        raise AmbiguousPattern(
            "landing footprints cross: left lands right of right with opposing yaws")


def _prospective_travels(plan: FootprintPlan) -> dict[int, float]:
    """Acting-foot travel for every print index >= 2, assuming simple
    alternation (jump pairing is resolved later)."""
    last = {plan[0].side: 0, plan[1].side: 1}
    travels: dict[int, float] = {}
    for i in range(2, len(plan)):
        fp = plan[i]
        prev = plan[last.get(fp.side, 0)]
        travels[i] = plane_distance(prev.pos, fp.pos)
        last[fp.side] = i
    return travels


def _window_size(graphs, lower: Family, higher: Family) -> int:
    if graphs is not None:
        graph = graphs.lookup(lower, higher)
        if graph is not None:
            return len(graph.steps)
    return DEFAULT_LOOKAHEAD


def lookahead_resolve(plan: FootprintPlan, index: int, db: MotionDatabase,
                      graphs=None) -> StepClassification:
    """Disambiguate a step whose distance lies in a raw-band overlap.

    Looks at the next N step distances (N = the relevant transition graph's
    step count): if all stay inside the overlap the steps are long steps of
    the lower family; if any lands in the higher-only region the step is
    classified as the higher family.
    """
    travels = _prospective_travels(plan)
    d = travels[index]
    for lower, higher in ((Family.WALKING, Family.RUNNING),
                          (Family.RUNNING, Family.JUMPING)):
        ov = overlap_region(db, lower, higher)
        if ov is None or not ov.contains(d):
            continue
        n = _window_size(graphs, lower, higher)
        window = [travels[j] for j in sorted(travels) if index <= j][:n]
        if any(w > ov.hi for w in window):
            label = RUNNING if higher is Family.RUNNING else None
            return StepClassification(plan_index=index, family=higher,
                                      label=label, long_step=False)
        all_in = all(ov.contains(w) for w in window)
        label = WALKING if lower is Family.WALKING else RUNNING
        return StepClassification(plan_index=index, family=lower, label=label,
                                  long_step=all_in)
    fam = classify_global(d, 0.0, db.limits)
    label = {Family.WALKING: WALKING, Family.RUNNING: RUNNING}.get(fam)
    return StepClassification(plan_index=index, family=fam, label=label)


def classify_plan(plan: FootprintPlan, db: MotionDatabase, graphs=None, *,
                  stair_trigger: float = STAIR_TRIGGER) -> list[StepClassification]:
    """Classify every step of a plan; total over all footprints.

    The first two footprints are the initial stance. Jump steps that land
    both feet simultaneously consume two footprints; every other step
    consumes one.
    """
    if plan[0].side is plan[1].side:
        raise ValidationError("initial stance needs one left and one right footprint")
    limits = db.limits
    travels = _prospective_travels(plan)
    last = {plan[0].side: 0, plan[1].side: 1}
    out: list[StepClassification] = []
    i = 2
    while i < len(plan):
        fp = plan[i]
        support = plan[last[fp.side.other]]
        start = plan[last[fp.side]]
        d = plane_distance(start.pos, fp.pos)
        dy = fp.pos[1] - support.pos[1]
        family = classify_global(d, dy, limits, stair_trigger=stair_trigger)

        cls: StepClassification
        if family is Family.JUMPING:
            following = plan[i + 1] if i + 1 < len(plan) else None
            pattern, label, consumed = classify_jump((start, fp, following),
                                                     support, limits)
            cls = StepClassification(plan_index=i, family=family, label=label,
                                     consumed=consumed, jump=pattern)
        elif family in (Family.WALKING, Family.RUNNING):
            cls = lookahead_resolve(plan, i, db, graphs)
            if cls.family is Family.JUMPING:
                # upgraded through the run/jump overlap: resolve the variant
                following = plan[i + 1] if i + 1 < len(plan) else None
                pattern, label, consumed = classify_jump((start, fp, following),
                                                         support, limits)
                cls = StepClassification(plan_index=i, family=Family.JUMPING,
                                         label=label, consumed=consumed,
                                         jump=pattern)
        elif family is Family.STAIR:
            cls = StepClassification(plan_index=i, family=family,
                                     label=STAIR_STEP)
        else:
            cls = StepClassification(plan_index=i, family=Family.UNREACHABLE,
                                     label=None)

        if fp.side is plan[i - 1].side and family is not Family.JUMPING:
            raise ValidationError(
                f"consecutive same-side footprints at {i} outside a jump",
                plan_index=i)

        out.append(cls)
        last[fp.side] = i
        if cls.consumed == 2:
            last[plan[i + 1].side] = i + 1
        i += cls.consumed
    return out


def classification_to_json(cls: StepClassification) -> dict:
    from .formats import label_to_json

    out = {
        "plan_index": cls.plan_index,
        "family": cls.family.value,
        "label": None if cls.label is None else label_to_json(cls.label),
        "consumed": cls.consumed,
        "flags": {"long_step": cls.long_step, "corrected": cls.corrected},
    }
    if cls.jump is not None:
        out["jump"] = {
            "theta_lift": cls.jump.theta_lift,
            "theta_land": cls.jump.theta_land,
            "travel": cls.jump.travel,
            "lead": None if cls.jump.lead_side is None else cls.jump.lead_side.value,
        }
    return out
