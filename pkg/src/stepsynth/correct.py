"""Plan auto-correction: keep every footprint inside the database's action
space.

Height: a step climbing more than the stair limit raises its supporting
footprint so the gain equals the limit exactly, cascading backwards while
predecessors violate in turn. Reach: a step beyond the jumping limit
shifts every previous footprint toward the target by an equal share of the
excess; one application implements the division rule, and the correction
pass repeats it until the plan scans clean. When corrections would have to
move the initial stance, footprints are inserted instead (stair chains
interpolate the climb, reach gaps get a stance pair at the midpoint), up
to an insertion cap.

Every change is logged; replaying the log on the original plan reproduces
the corrected plan exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .database import BehaviourLimits
from .errors import (NoPreviousFootprints, UnresolvablePlan, ValidationError)
from .geometry import plane_distance
from .patterns import STAIR_TRIGGER
from .types import Footprint, FootprintPlan, Side

INSERTION_CAP = 64
_EPS = 1e-12


@dataclass(frozen=True)
class PlanChange:
    op: str                      # "move" | "insert"
    index: int                   # position at the time the op applies
    footprint: Footprint
    previous: Footprint | None = None

    def to_json(self) -> dict:
        from .formats import footprint_to_json

        out = {"op": self.op, "index": self.index,
               "footprint": footprint_to_json(self.footprint)}
        if self.previous is not None:
            out["previous"] = footprint_to_json(self.previous)
        return out


def change_from_json(obj) -> PlanChange:
    from .formats import footprint_from_json

    prev = obj.get("previous")
    return PlanChange(op=obj["op"], index=int(obj["index"]),
                      footprint=footprint_from_json(obj["footprint"]),
                      previous=None if prev is None else footprint_from_json(prev))


def replay_changes(plan: FootprintPlan, log: list[PlanChange]) -> FootprintPlan:
    """Apply a change log in order; the result must equal the corrected plan."""
    prints = list(plan.footprints)
    for change in log:
        if change.op == "move":
            prints[change.index] = change.footprint
        elif change.op == "insert":
            prints.insert(change.index, change.footprint)
        else:
            raise ValidationError(f"unknown change op {change.op}")
    return FootprintPlan(tuple(prints))


def _same_side_travels(prints) -> dict[int, float]:
    last: dict[Side, int] = {prints[0].side: 0, prints[1].side: 1}
    travels = {}
    for i in range(2, len(prints)):
        fp = prints[i]
        travels[i] = plane_distance(prints[last.get(fp.side, 0)].pos, fp.pos)
        last[fp.side] = i
    return travels


def correct_height(plan: FootprintPlan, index: int,
                   l_stair: float) -> tuple[FootprintPlan, list[PlanChange]]:
    """Raise supporting footprints so each gain equals the stair limit,
    iterating backwards from ``index`` until no predecessor violates."""
    prints = list(plan.footprints)
    log: list[PlanChange] = []
    j = index
    while j >= 1:
        gain = prints[j].pos[1] - prints[j - 1].pos[1]
        if gain <= l_stair + _EPS:
            break
        old = prints[j - 1]
        lifted = old.moved(pos=np.array([old.pos[0],
                                         prints[j].pos[1] - l_stair,
                                         old.pos[2]]))
        prints[j - 1] = lifted
        log.append(PlanChange("move", j - 1, lifted, old))
        j -= 1
    return FootprintPlan(tuple(prints)), log


def correct_reach(plan: FootprintPlan, index: int,
                  limits: BehaviourLimits) -> tuple[FootprintPlan, list[PlanChange]]:
    """Divide the travel excess of the step at ``index`` equally over all
    previous footprints, shifting each toward the target on the ground
    plane. One application of the division rule; the correction pass
    iterates it until the step scans within limits."""
    if index < 2:
        raise NoPreviousFootprints("reach correction needs previous footprints",
                                   plan_index=index)
    prints = list(plan.footprints)
    travels = _same_side_travels(prints)
    excess = travels[index] - limits.jumping.hi
    if excess <= 0:
        return plan, []
    n_prev = index
    shift = excess / n_prev
    target = prints[index].pos
    log: list[PlanChange] = []
    for j in range(index):
        old = prints[j]
        direction = np.array([target[0] - old.pos[0], 0.0,
                              target[2] - old.pos[2]])
        norm = np.hypot(direction[0], direction[2])
        if norm < _EPS:
            continue
        moved = old.moved(pos=old.pos + direction / norm * shift)
        prints[j] = moved
        log.append(PlanChange("move", j, moved, old))
    return FootprintPlan(tuple(prints)), log


_VIOLATION_TOL = 1e-9  # sub-nanometer excess is float dust, not a violation


def _first_violation(prints, limits: BehaviourLimits,
                     stair_trigger: float) -> tuple[str, int] | None:
    travels = _same_side_travels(prints)
    for i in range(2, len(prints)):
        if (prints[i].pos[1] - prints[i - 1].pos[1]
                > limits.l_stair_height + _VIOLATION_TOL):
            return ("height", i)
        if travels[i] > limits.jumping.hi + _VIOLATION_TOL:
            return ("reach", i)
    return None


def _insert_stair_chain(prints, index: int, l_stair: float):
    """Interpolated climb between index-1 and index; the inserted count is
    even so side alternation survives."""
    a, b = prints[index - 1], prints[index]
    gain = b.pos[1] - a.pos[1]
    n = int(np.ceil(gain / l_stair)) - 1
    n = max(n, 2)
    if n % 2 == 1:
        n += 1
    inserted = []
    side = a.side
    for k in range(1, n + 1):
        t = k / (n + 1)
        side = side.other
        pos = a.pos + t * (b.pos - a.pos)
        inserted.append(Footprint(side, pos, a.yaw))
    return inserted


def _insert_midpoint_pair(prints, index: int):
    """Stance pair at the midpoint of an overlong gap, laterally offset so
    the two prints do not coincide."""
    a, b = prints[index - 1], prints[index]
    mid = 0.5 * (a.pos + b.pos)
    direction = b.pos - a.pos
    norm = np.hypot(direction[0], direction[2])
    fwd = direction / norm if norm > _EPS else np.array([0.0, 0.0, 1.0])
    lateral = np.array([fwd[2], 0.0, -fwd[0]])  # +90 degrees on the ground
    first = a.side.other
    off = 0.1
    return [
        Footprint(first, mid + lateral * (off * first.lateral_sign), a.yaw),
        Footprint(first.other, mid + lateral * (off * first.other.lateral_sign),
                  a.yaw),
    ]


def _total_excess(prints, limits: BehaviourLimits) -> float:
    travels = _same_side_travels(prints)
    total = 0.0
    for i in range(2, len(prints)):
        total += max(0.0, prints[i].pos[1] - prints[i - 1].pos[1]
                     - limits.l_stair_height)
        total += max(0.0, travels[i] - limits.jumping.hi)
    return total


def correct_plan(plan: FootprintPlan, limits: BehaviourLimits, *,
                 stair_trigger: float = STAIR_TRIGGER,
                 insertion_cap: int = INSERTION_CAP,
                 allow_stance_moves: bool = False,
                 ) -> tuple[FootprintPlan, list[PlanChange], set[int]]:
    """Full correction pass: returns the corrected plan, the change log and
    the set of final-plan indices that were touched.

    Reach corrections divide displacement over all previous footprints as
    the division rule states, each footprint carrying an adjustment budget
    of one jumping limit; a height cascade that would have to lift the
    initial stance, an exhausted budget, or a stalled reach pass switch to
    footprint insertion (the deadlock rule) up to the insertion cap.
    """
    current = plan
    log: list[PlanChange] = []
    touched: set[int] = set()
    inserted_total = 0
    budget = limits.jumping.hi
    moved_by = [0.0] * len(plan)

    def apply_moves(sub: list[PlanChange]):
        for change in sub:
            touched.add(change.index)
            if change.previous is not None:
                moved_by[change.index] += plane_distance(
                    change.footprint.pos, change.previous.pos)
        log.extend(sub)

    def apply_inserts(at: int, prints_to_insert):
        nonlocal current, inserted_total, touched
        inserted_total += len(prints_to_insert)
        if inserted_total > insertion_cap:
            raise UnresolvablePlan(
                f"insertion cap {insertion_cap} exceeded", plan_index=at)
        new_prints = list(current.footprints)
        touched = {t + len(prints_to_insert) if t >= at else t for t in touched}
        for k, fp in enumerate(prints_to_insert):
            new_prints.insert(at + k, fp)
            moved_by.insert(at + k, 0.0)
            log.append(PlanChange("insert", at + k, fp))
            touched.add(at + k)
        current = FootprintPlan(tuple(new_prints))

    for _ in range(10_000):
        violation = _first_violation(current.footprints, limits, stair_trigger)
        if violation is None:
            return current, log, touched
        kind, index = violation
        if kind == "height":
            candidate, sub = correct_height(current, index, limits.l_stair_height)
            stance_touched = any(c.index < 2 for c in sub)
            if stance_touched and not allow_stance_moves:
                apply_inserts(index, _insert_stair_chain(
                    current.footprints, index, limits.l_stair_height))
            else:
                current = candidate
                apply_moves(sub)
            continue
        if index < 2:
            raise NoPreviousFootprints("cannot divide displacement",
                                       plan_index=index)
        before = _total_excess(current.footprints, limits)
        candidate, sub = correct_reach(current, index, limits)
        over_budget = any(
            moved_by[c.index] + plane_distance(c.footprint.pos, c.previous.pos)
            > budget for c in sub if c.previous is not None)
        progressed = (sub and _total_excess(candidate.footprints, limits)
                      < before - _EPS)
        if progressed and not over_budget:
            current = candidate
            apply_moves(sub)
        else:
            apply_inserts(index, _insert_midpoint_pair(current.footprints, index))
    raise UnresolvablePlan("correction pass did not converge")


def resolve_deadlock(plan: FootprintPlan, limits: BehaviourLimits, *,
                     insertion_cap: int = INSERTION_CAP,
                     ) -> tuple[FootprintPlan, list[PlanChange]]:
    """Insertion-based resolution: the correction pass with stance moves
    forbidden, exposed as its own operation."""
    corrected, log, _ = correct_plan(plan, limits, insertion_cap=insertion_cap)
    return corrected, log
