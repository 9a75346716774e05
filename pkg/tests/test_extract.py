import itertools
import math
from dataclasses import dataclass

import numpy as np
import pytest
import shapely

from stepsynth.errors import NoCandidates, NotEnclosed
from stepsynth.extract import (CANDIDATE_CAP, CandidateSet, candidate_set,
                               select_enclosure)
from stepsynth.types import Family, Footprint, Side

TOE = 0.15


@dataclass(frozen=True)
class FakeClip:
    id: str


def fake_candidates(feet_xz, yaws=None, toes_xz=None, unbracketed=False):
    """CandidateSet stand-in for pure geometry tests."""
    feet_xz = np.asarray(feet_xz, dtype=float)
    n = len(feet_xz)
    feet = np.zeros((n, 3))
    feet[:, 0], feet[:, 2] = feet_xz[:, 0], feet_xz[:, 1]
    if toes_xz is None:
        toes = feet + [0.0, 0.0, TOE]
    else:
        toes_xz = np.asarray(toes_xz, dtype=float)
        toes = np.zeros((n, 3))
        toes[:, 0], toes[:, 2] = toes_xz[:, 0], toes_xz[:, 1]
    yaws = np.zeros(n) if yaws is None else np.asarray(yaws, dtype=float)
    return CandidateSet(
        clips=tuple(FakeClip(f"c{i:02d}") for i in range(n)),
        end_feet=feet, end_toes=toes, end_yaws=yaws, unbracketed=unbracketed)


def footprint(x, z, yaw=0.0, side=Side.LEFT):
    return Footprint(side, (x, 0.0, z), yaw)


def brute_force_best(points_xz, target_xz, ids):
    """Exhaustive C(n,4) oracle using shapely for containment."""
    best = None
    target = shapely.Point(target_xz)
    for comb in itertools.combinations(range(len(ids)), 4):
        pts = np.asarray(points_xz)[list(comb)]
        rel = pts - target_xz
        quad = pts[np.argsort(np.arctan2(rel[:, 0], rel[:, 1]))]
        poly = shapely.Polygon(quad)
        if not poly.is_valid or poly.area < 1e-8 or not poly.covers(target):
            continue
        score = float(np.sum(np.linalg.norm(pts - target_xz, axis=1)))
        key = (score, tuple(sorted(ids[i] for i in comb)))
        if best is None or key < best[0]:
            best = (key, tuple(sorted(comb)))
    return best


class TestSelectEnclosure:
    def test_unit_square_around_center(self):
        square = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        far = [(3.0, 3.0), (-3.0, 3.1), (3.0, -3.2), (-3.1, -3.0)]
        cands = fake_candidates(square + far,
                                toes_xz=[(x, z + TOE) for x, z in square + far])
        sel = select_enclosure(cands, footprint(0.0, 0.0), TOE)
        assert set(sel.foot.clip_ids) == {"c00", "c01", "c02", "c03"}
        assert sel.foot.score == pytest.approx(4 * math.sqrt(2) / 2, abs=1e-12)

    def test_target_outside_hull_raises(self):
        pts = [(0, 0), (1, 0), (0, 1), (1, 1), (0.5, 0.5)]
        cands = fake_candidates(pts)
        with pytest.raises(NotEnclosed):
            select_enclosure(cands, footprint(5.0, 5.0), TOE)

    def test_matches_brute_force_oracle_on_random_sets(self, rng):
        for trial in range(40):
            n = int(rng.integers(6, 13))
            pts = rng.uniform(-1, 1, (n, 2))
            target = pts.mean(axis=0) * 0.3
            cands = fake_candidates(pts, toes_xz=pts + [0.0, TOE])
            ids = [c.id for c in cands.clips]
            expect = brute_force_best(pts, target, ids)
            fp = footprint(target[0], target[1])
            if expect is None:
                with pytest.raises(NotEnclosed):
                    select_enclosure(cands, fp, TOE)
                continue
            sel = select_enclosure(cands, fp, TOE)
            (score, _), comb = expect
            assert sel.foot.score == pytest.approx(score, abs=1e-12)
            assert tuple(sorted(ids.index(i) for i in sel.foot.clip_ids)) == comb

    def test_selected_quad_passes_independent_containment(self, rng):
        for _ in range(25):
            pts = rng.uniform(-1, 1, (10, 2))
            target = pts.mean(axis=0) * 0.2
            cands = fake_candidates(pts, toes_xz=pts + [0.0, TOE])
            try:
                sel = select_enclosure(cands, footprint(*target), TOE)
            except NotEnclosed:
                continue
            quad = sel.foot.positions[:, [0, 2]]
            rel = quad - target
            ring = quad[np.argsort(np.arctan2(rel[:, 0], rel[:, 1]))]
            assert shapely.Polygon(ring).covers(shapely.Point(target))

    def test_boundary_counts_as_enclosed(self):
        square = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        cands = fake_candidates(square, toes_xz=[(x, z + TOE) for x, z in square])
        sel = select_enclosure(cands, footprint(0.5, 0.0), TOE)
        assert sel.foot.score == pytest.approx(
            0.5 + 0.5 + math.hypot(1.0, 0.5) * 2, abs=1e-12)

    def test_degenerate_collinear_rejected(self):
        line = [(0.0, z) for z in (-1.0, -0.5, 0.5, 1.0)]
        cands = fake_candidates(line)
        with pytest.raises(NotEnclosed):
            select_enclosure(cands, footprint(0.0, 0.0), TOE)

    def test_tie_broken_by_lexicographic_ids(self):
        # two congruent squares rotated into each other share the same score
        sq1 = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        sq2 = [(s * math.sqrt(0.5), 0) for s in (-1, 1)] + \
              [(0, s * math.sqrt(0.5)) for s in (-1, 1)]
        cands = fake_candidates(sq1 + sq2,
                                toes_xz=[(x, z + TOE) for x, z in sq1 + sq2])
        sel = select_enclosure(cands, footprint(0.0, 0.0), TOE)
        assert set(sel.foot.clip_ids) == {"c00", "c01", "c02", "c03"}

    def test_yaw_bracketing_prefers_straddling_quad(self):
        # inner square yaws all below target; outer square straddles
        inner = [(-0.4, -0.4), (0.4, -0.4), (0.4, 0.4), (-0.4, 0.4)]
        outer = [(-0.6, -0.6), (0.6, -0.6), (0.6, 0.6), (-0.6, 0.6)]
        yaws = [-0.3, -0.2, -0.25, -0.28, -0.1, 0.2, -0.05, 0.15]
        cands = fake_candidates(inner + outer, yaws=yaws,
                                toes_xz=[(x, z + TOE) for x, z in inner + outer])
        sel = select_enclosure(cands, footprint(0.0, 0.0, yaw=0.0), TOE)
        # the all-below inner square scores best but fails the bracketing rule
        assert set(sel.foot.clip_ids) != {"c00", "c01", "c02", "c03"}
        ids = [c.id for c in cands.clips]
        chosen_yaws = [yaws[ids.index(c)] for c in sel.foot.clip_ids]
        assert sum(y <= 0 for y in chosen_yaws) >= 2
        assert sum(y >= 0 for y in chosen_yaws) >= 2
        assert not sel.yaw_relaxed

    def test_relaxes_when_no_bracketing_subset_contains(self):
        inner = [(-0.4, -0.4), (0.4, -0.4), (0.4, 0.4), (-0.4, 0.4)]
        yaws = [-0.3, -0.2, -0.25, 0.1]  # only one at-or-above
        cands = fake_candidates(inner, yaws=yaws,
                                toes_xz=[(x, z + TOE) for x, z in inner])
        sel = select_enclosure(cands, footprint(0.0, 0.0, yaw=0.0), TOE)
        assert sel.yaw_relaxed


class TestCandidateSet:
    def test_exact_yaw_match_is_included(self, db_small):
        clip = db_small.clips_for(Family.WALKING, Side.RIGHT)[0]
        support = Footprint(Side.RIGHT, (0, 0, 0), 0.0)
        target = Footprint(Side.LEFT, (0, 0, 0.6), clip.end_local.yaw)
        cands = candidate_set(db_small, support, Family.WALKING,
                              clip.v_root, target)
        assert clip.id in [c.id for c in cands.clips]

    def test_bracketing_two_each_side(self, db_small):
        support = Footprint(Side.RIGHT, (0, 0, 0), 0.0)
        target = Footprint(Side.LEFT, (-0.2, 0, 0.6), 0.0)
        cands = candidate_set(db_small, support, Family.WALKING, 1.2, target)
        rel = cands.end_yaws - target.yaw
        assert np.sum(rel <= 1e-12) >= 2
        assert np.sum(rel >= -1e-12) >= 2
        assert not cands.unbracketed

    def test_unbracketed_flag_when_all_below(self, db_small):
        support = Footprint(Side.RIGHT, (0, 0, 0), 0.0)
        target = Footprint(Side.LEFT, (-0.2, 0, 0.6), 3.0)  # above every clip
        cands = candidate_set(db_small, support, Family.WALKING, 1.2, target)
        assert cands.unbracketed
        assert len(cands.clips) > 0

    def test_truncation_to_cap(self, db600):
        support = Footprint(Side.RIGHT, (0, 0, 0), 0.0)
        target = Footprint(Side.LEFT, (-0.2, 0, 0.6), 0.0)
        cands = candidate_set(db600, support, Family.WALKING, 1.2, target)
        assert len(cands.clips) == CANDIDATE_CAP

    def test_ranking_distance_primary_velocity_secondary(self, db600):
        from stepsynth.geometry import rot_y

        support = Footprint(Side.RIGHT, (0, 0, 0), 0.0)
        target = Footprint(Side.LEFT, (-0.2, 0, 0.6), 0.0)
        cands = candidate_set(db600, support, Family.WALKING, 1.2, target)
        kept = {c.id for c in cands.clips}
        pool = db600.clips_for(Family.WALKING, Side.RIGHT)

        def key(c):
            end = support.pos + rot_y(c.end_local.foot_pos, support.yaw)
            d = np.hypot(end[0] - target.pos[0], end[2] - target.pos[2])
            return (d, abs(c.v_root - 1.2), c.id)

        best = sorted(pool, key=key)[:4]
        # the four best-ranked clips must all survive the cut
        assert {c.id for c in best} <= kept

    def test_no_candidates(self, db_small):
        support = Footprint(Side.RIGHT, (0, 0, 0), 0.0)
        target = Footprint(Side.LEFT, (0, 0, 0.6), 0.0)
        with pytest.raises(NoCandidates):
            candidate_set(db_small, support, Family.UNREACHABLE, 1.0, target)

    def test_aligned_support_matches_footprint(self, db_small):
        support = Footprint(Side.RIGHT, (1.0, 0.2, -2.0), 0.7)
        target = Footprint(Side.LEFT, (0.8, 0.2, -1.4), 0.7)
        cands = candidate_set(db_small, support, Family.WALKING, 1.2, target)
        for clip in cands.clips:
            assert np.allclose(clip.support.foot_pos, support.pos, atol=1e-9)
            assert clip.support.yaw == pytest.approx(support.yaw, abs=1e-12)
