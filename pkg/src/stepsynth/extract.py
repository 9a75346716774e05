"""Reference-motion extraction: pick the clips whose end poses enclose a
target footprint.

Two quads are selected per step, one enclosing the target's foot joint and
one its toe joint. Candidates are ranked by root-velocity closeness but
must bracket the target yaw from below and above; among all containing
4-subsets the one with the smallest summed vertex distance wins, with
clip-id ties broken lexicographically for reproducibility.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .database import MotionDatabase, align_support
from .errors import NoCandidates, NotEnclosed
from .geometry import normalize_yaw
from .types import (BehaviourLabel, Family, Footprint, Side, StepClip)

CANDIDATE_CAP = 12          # C(12,4) = 495 subsets keeps the search bounded
MIN_POLYGON_AREA = 1e-8     # quads flatter than this are not polygons
_YAW_EQ_TOL = 1e-12


@dataclass(frozen=True)
class CandidateSet:
    """Aligned clips ordered by end yaw, plus their aligned end poses."""

    clips: tuple[StepClip, ...]
    end_feet: np.ndarray    # (n, 3) aligned global end foot positions
    end_toes: np.ndarray    # (n, 3)
    end_yaws: np.ndarray    # (n,)
    unbracketed: bool


@dataclass(frozen=True)
class JointEnclosure:
    clip_ids: tuple[str, ...]
    clips: tuple[StepClip, ...]
    positions: np.ndarray   # (4, 3) aligned end positions of this joint
    score: float            # sum of vertex-to-target plane distances


@dataclass(frozen=True)
class EnclosureSelection:
    foot: JointEnclosure
    toe: JointEnclosure
    yaw_relaxed: bool = False


def _family(behaviour) -> Family:
    return behaviour.family if isinstance(behaviour, BehaviourLabel) else behaviour


def candidate_set(db: MotionDatabase, support: Footprint, behaviour,
                  v_target: float, target: Footprint, *,
                  cap: int = CANDIDATE_CAP,
                  toe_offset: float | None = None) -> CandidateSet:
    """Clips of the behaviour family aligned onto the support footprint.

    Ranking is by end-pose distance to the target footprint, with root
    velocity closeness to the scheduled velocity as the secondary key. The
    two best-ranked clips whose end yaw lies at or below the target yaw and
    the two best at or above it are always kept, then the rest fill up to
    ``cap`` by rank.
    """
    family = _family(behaviour)
    pool = db.clips_for(family, support.side)
    if not pool:
        raise NoCandidates(f"no {family.value} clips with "
                           f"{support.side.value} support")

    # End poses after alignment follow from the locals directly; full-frame
    # alignment is deferred to the clips that survive the cut.
    from .geometry import rot_y

    end_yaws = np.array([normalize_yaw(support.yaw + c.end_local.yaw) for c in pool])
    rel_yaws = np.array([normalize_yaw(y - target.yaw) for y in end_yaws])
    end_feet = np.array([support.pos + rot_y(c.end_local.foot_pos, support.yaw)
                         for c in pool])
    dist = np.hypot(end_feet[:, 0] - target.pos[0], end_feet[:, 2] - target.pos[2])
    rank = sorted(range(len(pool)),
                  key=lambda i: (dist[i], abs(pool[i].v_root - v_target),
                                 pool[i].id))

    below = [i for i in rank if rel_yaws[i] <= _YAW_EQ_TOL]
    above = [i for i in rank if rel_yaws[i] >= -_YAW_EQ_TOL]
    # nearest clips alone can cluster on one side of the target; keeping the
    # best two per bearing quadrant (around the foot target and around the
    # toe target) guarantees a surrounding spread for both polygons
    if toe_offset is None:
        toe_offset = db.toe_offset
    end_toes = np.array([support.pos + rot_y(c.end_local.toe_pos, support.yaw)
                         for c in pool])
    toe_target = target.toe_target(toe_offset)
    buckets = [below[:2], above[:2]]
    for pts, ref in ((end_feet, target.pos), (end_toes, toe_target)):
        quadrant = ((pts[:, 0] > ref[0]).astype(int) * 2
                    + (pts[:, 2] > ref[2]).astype(int))
        buckets += [[i for i in rank if quadrant[i] == q][:2] for q in range(4)]
    chosen: list[int] = []
    for bucket in buckets:
        for i in bucket:
            if i not in chosen:
                chosen.append(i)
    for i in rank:
        if len(chosen) >= max(min(cap, len(pool)), len(chosen)):
            break
        if i not in chosen:
            chosen.append(i)

    chosen.sort(key=lambda i: (end_yaws[i], pool[i].id))
    aligned = tuple(align_support(pool[i], support) for i in chosen)
    from .transforms import to_global
    ends = [to_global(c.end_local, c.support) for c in aligned]
    return CandidateSet(
        clips=aligned,
        end_feet=np.array([e.foot_pos for e in ends]),
        end_toes=np.array([e.toe_pos for e in ends]),
        end_yaws=np.array([e.yaw for e in ends]),
        unbracketed=len(below) < 2 or len(above) < 2,
    )


def _bearing_sorted(quads: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Sort each quad's vertices by bearing around the target point."""
    rel = quads - point
    ang = np.arctan2(rel[..., 0], rel[..., 1])
    order = np.argsort(ang, axis=1)
    return np.take_along_axis(quads, order[..., None], axis=1)


def _shoelace_area(quads: np.ndarray) -> np.ndarray:
    x, z = quads[..., 0], quads[..., 1]
    xn, zn = np.roll(x, -1, axis=1), np.roll(z, -1, axis=1)
    return 0.5 * np.abs(np.sum(x * zn - xn * z, axis=1))


def _contains(quads: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Boundary-inclusive point-in-polygon over a batch of bearing-sorted quads."""
    p1 = quads
    p2 = np.roll(quads, -1, axis=1)
    d = p2 - p1
    rel = point - p1
    # exact-on-edge check: zero cross product and within the segment box
    cross = d[..., 0] * rel[..., 1] - d[..., 1] * rel[..., 0]
    dot = rel[..., 0] * d[..., 0] + rel[..., 1] * d[..., 1]
    seg_len2 = d[..., 0] ** 2 + d[..., 1] ** 2
    on_edge = (np.abs(cross) <= 1e-12) & (dot >= -1e-12) & (dot <= seg_len2 + 1e-12)

    # even-odd crossing number with a +x ray
    z1, z2 = p1[..., 1], p2[..., 1]
    straddle = (z1 > point[1]) != (z2 > point[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = p1[..., 0] + (point[1] - z1) * d[..., 0] / np.where(
            d[..., 1] == 0, 1.0, d[..., 1])
    crossing = straddle & (x_int > point[0])
    inside = (np.sum(crossing, axis=1) % 2) == 1
    return inside | np.any(on_edge, axis=1)


def _best_subset(points_xz: np.ndarray, point: np.ndarray, ids: list[str],
                 yaw_ok_mask: np.ndarray | None):
    n = points_xz.shape[0]
    combs = np.array(list(itertools.combinations(range(n), 4)))
    quads = _bearing_sorted(points_xz[combs], point)
    valid = (_shoelace_area(quads) >= MIN_POLYGON_AREA) & _contains(quads, point)
    if yaw_ok_mask is not None:
        valid &= yaw_ok_mask
    if not np.any(valid):
        return None
    dists = np.linalg.norm(points_xz[combs] - point, axis=2)
    scores = np.sum(dists, axis=1)
    scores[~valid] = np.inf
    best = np.min(scores)
    tied = np.flatnonzero(scores == best)
    key = min(tied, key=lambda t: tuple(sorted(ids[i] for i in combs[t])))
    return combs[key], float(best)


def select_enclosure(candidates: CandidateSet, target: Footprint,
                     toe_offset: float, *,
                     plan_index: int | None = None) -> EnclosureSelection:
    """Minimum-score containing quads for the foot and toe targets.

    The yaw-bracketing requirement (two end yaws at or below the target, two
    at or above, within each quad) is enforced when the candidate set can
    support it and relaxed otherwise; pure containment failures raise
    NotEnclosed for the corrector to handle.
    """
    clips = candidates.clips
    if len(clips) < 4:
        raise NotEnclosed("foot", plan_index=plan_index)
    ids = [c.id for c in clips]
    rel = np.array([normalize_yaw(y - target.yaw) for y in candidates.end_yaws])
    combs = np.array(list(itertools.combinations(range(len(clips)), 4)))
    below = np.sum(rel[combs] <= _YAW_EQ_TOL, axis=1)
    above = np.sum(rel[combs] >= -_YAW_EQ_TOL, axis=1)
    yaw_ok = (below >= 2) & (above >= 2)

    targets = {"foot": target.pos[[0, 2]],
               "toe": target.toe_target(toe_offset)[[0, 2]]}
    points = {"foot": candidates.end_feet[:, [0, 2]],
              "toe": candidates.end_toes[:, [0, 2]]}
    full = {"foot": candidates.end_feet, "toe": candidates.end_toes}

    chosen = {}
    relaxed = False
    for joint in ("foot", "toe"):
        result = None
        if not candidates.unbracketed:
            result = _best_subset(points[joint], targets[joint], ids, yaw_ok)
        if result is None:
            result = _best_subset(points[joint], targets[joint], ids, None)
            relaxed = relaxed or not candidates.unbracketed and result is not None
        if result is None:
            raise NotEnclosed(joint, plan_index=plan_index)
        idx, score = result
        chosen[joint] = JointEnclosure(
            clip_ids=tuple(ids[i] for i in idx),
            clips=tuple(clips[i] for i in idx),
            positions=full[joint][idx],
            score=score)
    return EnclosureSelection(foot=chosen["foot"], toe=chosen["toe"],
                              yaw_relaxed=relaxed)


def selection_to_json(sel: EnclosureSelection) -> dict:
    def joint(j: JointEnclosure) -> dict:
        return {"clip_ids": list(j.clip_ids),
                "positions": [[float(x) for x in p] for p in j.positions],
                "score": j.score}

    return {"foot": joint(sel.foot), "toe": joint(sel.toe),
            "yaw_relaxed": sel.yaw_relaxed}
