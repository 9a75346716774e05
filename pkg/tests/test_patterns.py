import math

import numpy as np
import pytest

from stepsynth.database import Range, stitch_limits
from stepsynth.errors import AmbiguousPattern, ValidationError
from stepsynth.patterns import (StepClassification, classify_global,
                                classify_jump, classify_plan, lookahead_resolve)
from stepsynth.types import (BehaviourKind, Family, Footprint, FootprintPlan,
                             Side)

LIMITS = stitch_limits(
    {Family.WALKING: Range(0.3, 0.9), Family.RUNNING: Range(0.7, 1.6),
     Family.JUMPING: Range(1.4, 2.6), Family.STAIR: Range(0.25, 0.5)},
    l_stair_height=0.3, theta_thres_lift=0.6, theta_thres_land=0.6,
    d_feet_max=0.3)


def fp(side, x, z, y=0.0, yaw=0.0):
    return Footprint(side, (x, y, z), yaw)


def straight_plan(travels, lateral=0.1, first=Side.LEFT):
    """Alternating straight-line plan whose acting-foot travels equal
    ``travels`` exactly. The stance is interleaved (second print starts
    half the first travel ahead) so consecutive prints advance naturally."""
    sides = [first, first.other]
    prints = [fp(first, -lateral if first is Side.LEFT else lateral, 0.0),
              fp(first.other, lateral if first is Side.LEFT else -lateral,
                 travels[0] / 2 if travels else 0.0)]
    z = {first: 0.0, first.other: travels[0] / 2 if travels else 0.0}
    for k, t in enumerate(travels):
        side = sides[k % 2]
        z[side] += t
        x = -lateral if side is Side.LEFT else lateral
        prints.append(fp(side, x, z[side]))
    return FootprintPlan(tuple(prints))


class TestClassifyGlobal:
    def test_zero_distance_is_walking(self):
        assert classify_global(0.0, 0.0, LIMITS) is Family.WALKING

    @pytest.mark.parametrize("d,family", [
        (1.2, Family.RUNNING), (2.0, Family.JUMPING), (3.0, Family.UNREACHABLE)])
    def test_stitched_ladder(self, d, family):
        assert classify_global(d, 0.0, LIMITS) is family

    def test_stair_trigger(self):
        assert classify_global(0.4, 0.15, LIMITS) is Family.STAIR

    def test_below_trigger_is_distance_based(self):
        assert classify_global(0.4, 0.03, LIMITS) is Family.WALKING

    def test_monotone_in_distance(self):
        order = {Family.WALKING: 0, Family.RUNNING: 1, Family.JUMPING: 2,
                 Family.UNREACHABLE: 3}
        ranks = [order[classify_global(d, 0.0, LIMITS)]
                 for d in np.linspace(0.0, 4.0, 400)]
        assert all(a <= b for a, b in zip(ranks, ranks[1:]))


class TestClassifyJump:
    SUPPORT = fp(Side.RIGHT, 0.1, 0.0)

    def test_both_lift_both_land(self):
        start = fp(Side.LEFT, -0.1, 0.02)
        land = fp(Side.LEFT, -0.1, 1.9)
        follow = fp(Side.RIGHT, 0.1, 1.92)
        pattern, label, consumed = classify_jump((start, land, follow),
                                                 self.SUPPORT, LIMITS)
        assert label.kind is BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND
        assert consumed == 2
        assert label.lead is Side.LEFT
        assert abs(pattern.theta_lift) <= LIMITS.theta_thres_lift

    def test_one_lift_both_land_lead_is_forward_foot(self):
        start = fp(Side.LEFT, -0.1, -0.5)  # rear foot; support is forward
        land = fp(Side.LEFT, -0.1, 1.5)
        follow = fp(Side.RIGHT, 0.1, 1.52)
        pattern, label, consumed = classify_jump((start, land, follow),
                                                 self.SUPPORT, LIMITS)
        assert label.kind is BehaviourKind.JUMP_ONE_LIFT_BOTH_LAND
        assert label.lead is Side.RIGHT
        assert consumed == 2
        assert abs(pattern.theta_lift) > LIMITS.theta_thres_lift

    def test_mirrored_geometry_flips_lead(self):
        start = fp(Side.LEFT, -0.1, -0.5)
        land = fp(Side.LEFT, -0.1, 1.5)
        follow = fp(Side.RIGHT, 0.1, 1.52)
        _, label, _ = classify_jump((start, land, follow), self.SUPPORT, LIMITS)
        _, mlabel, _ = classify_jump(
            (start.mirrored(), land.mirrored(), follow.mirrored()),
            self.SUPPORT.mirrored(), LIMITS)
        assert mlabel.kind is label.kind
        assert mlabel.lead is label.lead.other

    def test_both_lift_one_land(self):
        start = fp(Side.LEFT, -0.1, 0.0)
        land = fp(Side.LEFT, -0.1, 1.9)
        follow = fp(Side.RIGHT, 0.1, 1.4)  # trails by 0.5
        _, label, consumed = classify_jump((start, land, follow),
                                           self.SUPPORT, LIMITS)
        assert label.kind is BehaviourKind.JUMP_BOTH_LIFT_ONE_LAND
        assert label.lead is Side.LEFT
        assert consumed == 1

    def test_one_lift_one_land_without_following(self):
        start = fp(Side.LEFT, -0.1, -0.5)
        land = fp(Side.LEFT, -0.1, 1.5)
        _, label, consumed = classify_jump((start, land, None),
                                           self.SUPPORT, LIMITS)
        assert label.kind is BehaviourKind.JUMP_ONE_LIFT_ONE_LAND
        assert consumed == 1

    def test_crossed_landing_raises(self):
        start = fp(Side.LEFT, -0.1, 0.0)
        land = fp(Side.LEFT, 0.5, 1.9, yaw=0.0)          # left far right
        follow = fp(Side.RIGHT, 0.0, 1.9, yaw=3.0)        # opposing yaw
        with pytest.raises(AmbiguousPattern):
            classify_jump((start, land, follow), self.SUPPORT, LIMITS)


class TestLookahead:
    def test_all_four_in_overlap_are_long_steps(self, db600):
        plan = straight_plan([0.8, 0.8, 0.8, 0.8])
        out = classify_plan(plan, db600)
        assert all(c.family is Family.WALKING for c in out)
        assert all(c.long_step for c in out)

    def test_one_running_only_step_upgrades(self, db600):
        plan = straight_plan([0.85, 0.85, 1.3, 0.85])
        out = classify_plan(plan, db600)
        assert out[0].family is Family.RUNNING
        assert not out[0].long_step

    def test_no_overlap_matches_global(self, db600):
        plan = straight_plan([0.5, 0.5, 0.5, 0.5])
        for idx in (2, 3, 4, 5):
            cls = lookahead_resolve(plan, idx, db600)
            assert cls.family is classify_global(0.5, 0.0, db600.limits)
            assert not cls.long_step

    def test_truncated_window_at_plan_end(self, db600):
        plan = straight_plan([0.8, 0.8])
        out = classify_plan(plan, db600)
        assert all(c.family is Family.WALKING and c.long_step for c in out)


class TestClassifyPlan:
    def test_total_function_over_footprints(self, db600):
        plan = straight_plan([0.5, 0.6, 0.8, 1.2, 1.2, 0.4])
        out = classify_plan(plan, db600)
        covered = []
        for c in out:
            covered.append(c.plan_index)
            if c.consumed == 2:
                covered.append(c.plan_index + 1)
        assert covered == list(range(2, len(plan)))

    def test_stair_step_classification(self, db600):
        plan = FootprintPlan((
            fp(Side.LEFT, -0.1, 0.0), fp(Side.RIGHT, 0.1, 0.0),
            fp(Side.LEFT, -0.1, 0.35, y=0.15), fp(Side.RIGHT, 0.1, 0.7, y=0.3)))
        out = classify_plan(plan, db600)
        assert [c.family for c in out] == [Family.STAIR, Family.STAIR]

    def test_unreachable_is_a_value(self, db600):
        plan = straight_plan([5.0])
        out = classify_plan(plan, db600)
        assert out[0].family is Family.UNREACHABLE
        assert out[0].label is None

    def test_mirror_equivariance(self, db600):
        plan = straight_plan([0.5, 0.7, 1.2, 1.2, 0.45, 0.8])
        a = classify_plan(plan, db600)
        b = classify_plan(plan.mirrored(), db600)
        assert len(a) == len(b)
        for ca, cb in zip(a, b):
            assert ca.family is cb.family
            assert ca.consumed == cb.consumed
            if ca.label is None:
                assert cb.label is None
            else:
                assert cb.label == ca.label.mirrored()

    def test_jump_plan_consumes_pair(self, db600):
        plan = FootprintPlan((
            fp(Side.LEFT, -0.1, 0.0), fp(Side.RIGHT, 0.1, 0.02),
            fp(Side.LEFT, -0.1, 1.9), fp(Side.RIGHT, 0.1, 1.92)))
        out = classify_plan(plan, db600)
        assert len(out) == 1
        assert out[0].label.kind is BehaviourKind.JUMP_BOTH_LIFT_BOTH_LAND
        assert out[0].consumed == 2

    def test_consecutive_same_side_outside_jump_rejected(self, db600):
        plan = FootprintPlan((
            fp(Side.LEFT, -0.1, 0.0), fp(Side.RIGHT, 0.1, 0.0),
            fp(Side.RIGHT, 0.1, 0.5)))
        with pytest.raises(ValidationError):
            classify_plan(plan, db600)

    def test_jump_pattern_depends_only_on_window(self, db600):
        # identical stance + jump window, different unrelated leading steps
        def plan(first_z):
            return FootprintPlan((
                fp(Side.LEFT, -0.1, first_z), fp(Side.RIGHT, 0.1, 0.25),
                fp(Side.LEFT, -0.1, 0.5), fp(Side.RIGHT, 0.1, 0.75),
                fp(Side.LEFT, -0.1, 2.5)))

        out1 = classify_plan(plan(0.0), db600)
        out2 = classify_plan(plan(0.1), db600)
        assert out1[-1].label.kind is out2[-1].label.kind
        assert out1[-1].jump.theta_lift == pytest.approx(out2[-1].jump.theta_lift)
        assert out1[-1].jump.theta_land == pytest.approx(out2[-1].jump.theta_land)
