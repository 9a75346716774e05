"""Behaviour transition graphs and root-velocity scheduling.

A transition graph is the per-step mean root velocity profile around a
behaviour change, anchored at the step where the velocity characteristic
(max when accelerating into running/jumping, min when easing into stair
stepping) occurs. Graphs are built once from labeled multi-step sequences:
foot contacts segment the sequence into steps, per-step velocities are
extracted, the series are aligned on their extremum step, trimmed to the
mean extent and averaged. Inverse transitions reuse the forward graph
step-reversed instead of requiring their own measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import MissingGraph, UnknownPair, ValidationError
from .geometry import plane_distance
from .types import Family, PoseTrack, Side

V_THRESH = 0.15      # m/s, foot speed below which contact is possible
H_THRESH = 0.05      # m, foot height below which contact is possible
MIN_CONTACT_FRAMES = 3
MIN_SEGMENT_FRAMES = 5
FALLBACK_WINDOW = 4  # steps, when a pair has no graph and no inverse


class Characteristic(Enum):
    MAX = "max"
    MIN = "min"


# Table of measured velocity characteristics per (from, to) family pair;
# pairs with related velocities transit correctly without a graph.
TABLE1: dict[tuple[Family, Family], Characteristic] = {
    (Family.WALKING, Family.RUNNING): Characteristic.MAX,
    (Family.WALKING, Family.JUMPING): Characteristic.MAX,
    (Family.WALKING, Family.STAIR): Characteristic.MIN,
    (Family.RUNNING, Family.JUMPING): Characteristic.MAX,
    (Family.RUNNING, Family.STAIR): Characteristic.MIN,
}


def characteristic_of(from_family: Family, to_family: Family) -> Characteristic:
    """Velocity characteristic for a pair, derivable by inversion."""
    direct = TABLE1.get((from_family, to_family))
    if direct is not None:
        return direct
    inverse = TABLE1.get((to_family, from_family))
    if inverse is not None:
        return inverse
    raise UnknownPair(f"no velocity characteristic for "
                      f"{from_family.value} -> {to_family.value}")


@dataclass(frozen=True)
class ContactEvent:
    foot: Side
    frame_start: int
    frame_end: int  # inclusive
    step_index: int


@dataclass(frozen=True)
class StepVelocitySeries:
    pairs: tuple[tuple[int, float], ...]
    anchor: int | None = None

    @property
    def velocities(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.pairs)


@dataclass(frozen=True)
class TransitionGraph:
    from_family: Family
    to_family: Family
    characteristic: Characteristic
    steps: tuple[tuple[int, float], ...]  # (step offset, mean velocity)
    source_count: int = 1

    def reversed(self) -> "TransitionGraph":
        """The inverse transition: same velocities traversed backwards."""
        rev = tuple((-off, v) for off, v in reversed(self.steps))
        return TransitionGraph(self.to_family, self.from_family,
                               self.characteristic, rev, self.source_count)


@dataclass(frozen=True)
class TransitionGraphSet:
    graphs: tuple[TransitionGraph, ...]

    def lookup(self, from_family: Family, to_family: Family) -> TransitionGraph | None:
        for g in self.graphs:
            if g.from_family is from_family and g.to_family is to_family:
                return g
        for g in self.graphs:
            if g.from_family is to_family and g.to_family is from_family:
                return g.reversed()
        return None


def detect_contacts(track: PoseTrack, fps: float, v_thresh: float = V_THRESH,
                    h_thresh: float = H_THRESH) -> list[ContactEvent]:
    """Contact runs per foot from foot speed and height; short runs are noise.

    Step indices increment at each new contact of either foot, in frame
    order (left before right on ties).
    """
    if len(track) < 2:
        raise ValidationError("need at least 2 frames")
    raw: list[tuple[int, int, Side]] = []
    for side in (Side.LEFT, Side.RIGHT):
        pos = track.foot_arrays(side)[0]
        gap = np.linalg.norm(np.diff(pos, axis=0), axis=1) * fps
        # a frame counts as still if the foot rests on either adjacent
        # interval, so contact runs include their first and last frame
        speed = np.minimum(np.concatenate([[gap[0]], gap]),
                           np.concatenate([gap, [gap[-1]]]))
        mask = (speed < v_thresh) & (pos[:, 1] < h_thresh)
        start = None
        for i, m in enumerate(mask):
            if m and start is None:
                start = i
            elif not m and start is not None:
                if i - start >= MIN_CONTACT_FRAMES:
                    raw.append((start, i - 1, side))
                start = None
        if start is not None and len(mask) - start >= MIN_CONTACT_FRAMES:
            raw.append((start, len(mask) - 1, side))
    raw.sort(key=lambda e: (e[0], 0 if e[2] is Side.LEFT else 1))
    return [ContactEvent(foot=side, frame_start=s, frame_end=e, step_index=k)
            for k, (s, e, side) in enumerate(raw)]


def step_velocity_series(track: PoseTrack, fps: float, *,
                         v_thresh: float = V_THRESH,
                         h_thresh: float = H_THRESH) -> StepVelocitySeries:
    """Per-step root velocities between consecutive contact starts."""
    events = detect_contacts(track, fps, v_thresh, h_thresh)
    boundaries = sorted({e.frame_start for e in events})
    if len(track) - 1 - boundaries[-1] >= MIN_SEGMENT_FRAMES:
        boundaries.append(len(track) - 1)
    pairs = []
    for k, (a, b) in enumerate(zip(boundaries, boundaries[1:])):
        if b - a < MIN_SEGMENT_FRAMES:
            continue
        v = plane_distance(track.root_pos[b], track.root_pos[a]) / ((b - a) / fps)
        pairs.append((k, v))
    if not pairs:
        raise ValidationError("no steps detected")
    return StepVelocitySeries(pairs=tuple(pairs))


def identify_transition(series: StepVelocitySeries, from_family: Family,
                        to_family: Family) -> int:
    """Anchor step: where the pair's velocity characteristic is attained.

    First occurrence wins on ties.
    """
    if not series.pairs:
        raise ValidationError("empty series")
    vs = np.array(series.velocities)
    char = characteristic_of(from_family, to_family)
    return int(np.argmax(vs) if char is Characteristic.MAX else np.argmin(vs))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def align_and_trim(series_list: list[StepVelocitySeries]) -> list[StepVelocitySeries]:
    """Shift anchors to offset 0 and trim to the mean extent.

    The kept window is [-round(mean steps before anchor), +round(mean steps
    after anchor)], rounding half up; steps outside it are dropped.
    """
    if not series_list:
        raise ValidationError("no series to align")
    for s in series_list:
        if s.anchor is None or not (0 <= s.anchor < len(s.pairs)):
            raise ValidationError("every series needs an in-range anchor")
    before = _round_half_up(float(np.mean([s.anchor for s in series_list])))
    after = _round_half_up(float(np.mean(
        [len(s.pairs) - 1 - s.anchor for s in series_list])))
    out = []
    for s in series_list:
        shifted = tuple((k - s.anchor, v) for k, (_, v) in enumerate(s.pairs))
        kept = tuple((off, v) for off, v in shifted if -before <= off <= after)
        out.append(StepVelocitySeries(pairs=kept, anchor=0))
    return out


def build_graph(aligned: list[StepVelocitySeries], from_family: Family,
                to_family: Family) -> TransitionGraph:
    """Pointwise mean of aligned series at each offset they cover."""
    if not aligned:
        raise ValidationError("no aligned series")
    sums: dict[int, list[float]] = {}
    for s in aligned:
        for off, v in s.pairs:
            sums.setdefault(off, []).append(v)
    steps = tuple((off, float(np.mean(sums[off]))) for off in sorted(sums))
    return TransitionGraph(from_family=from_family, to_family=to_family,
                           characteristic=characteristic_of(from_family, to_family),
                           steps=steps, source_count=len(aligned))


def build_graphs(sequences) -> TransitionGraphSet:
    """Batch pipeline over labeled sequences: contacts -> series -> anchor ->
    alignment -> trimming -> mean graphs, grouped per behaviour pair."""
    grouped: dict[tuple[Family, Family], list[StepVelocitySeries]] = {}
    for seq in sequences:
        series = step_velocity_series(seq.frames, seq.fps)
        anchor = identify_transition(series, seq.from_family, seq.to_family)
        grouped.setdefault((seq.from_family, seq.to_family), []).append(
            replace(series, anchor=anchor))
    graphs = []
    for (a, b), group in sorted(grouped.items(),
                                key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        graphs.append(build_graph(align_and_trim(group), a, b))
    return TransitionGraphSet(graphs=tuple(graphs))


@dataclass(frozen=True)
class ScheduleNote:
    step: int
    from_family: Family
    to_family: Family
    fallback: bool


def schedule_velocities(classifications, graphs: TransitionGraphSet | None,
                        base_velocity) -> tuple[list[float], list[ScheduleNote]]:
    """Per-step target root velocities across behaviour changes.

    Steps away from changes take their family's base velocity. Around a
    change at step k the graph's window is laid over steps k + offset; when
    two windows overlap the later change wins. Pairs without a graph or an
    inverse fall back to linear interpolation over the default window and
    are flagged in the notes.
    """
    families = [c.family for c in classifications]
    for fam in families:
        if fam is Family.UNREACHABLE:
            raise ValidationError("cannot schedule an unreachable step")
    velocities = [float(base_velocity[f]) for f in families]
    notes: list[ScheduleNote] = []
    n = len(velocities)
    for k in range(1, n):
        a, b = families[k - 1], families[k]
        if a is b:
            continue
        graph = graphs.lookup(a, b) if graphs is not None else None
        if graph is None:
            for j in range(FALLBACK_WINDOW):
                idx = k - FALLBACK_WINDOW + 1 + j
                if 0 <= idx < n:
                    t = (j + 1) / FALLBACK_WINDOW
                    velocities[idx] = (1 - t) * float(base_velocity[a]) \
                        + t * float(base_velocity[b])
            notes.append(ScheduleNote(k, a, b, fallback=True))
            continue
        for off, v in graph.steps:
            idx = k + off
            if 0 <= idx < n:
                velocities[idx] = v
        notes.append(ScheduleNote(k, a, b, fallback=False))
    return velocities, notes


def graphs_to_json(gs: TransitionGraphSet) -> dict:
    return {"graphs": [
        {"from": g.from_family.value, "to": g.to_family.value,
         "characteristic": g.characteristic.value,
         "steps": [[int(o), float(v)] for o, v in g.steps],
         "source_count": g.source_count}
        for g in gs.graphs]}


def graphs_from_json(obj) -> TransitionGraphSet:
    try:
        return TransitionGraphSet(graphs=tuple(
            TransitionGraph(
                from_family=Family(g["from"]), to_family=Family(g["to"]),
                characteristic=Characteristic(g["characteristic"]),
                steps=tuple((int(o), float(v)) for o, v in g["steps"]),
                source_count=int(g.get("source_count", 1)))
            for g in obj["graphs"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(f"bad graphs payload: {exc}") from exc


def graphs_to_csv(gs: TransitionGraphSet) -> str:
    """(transition, offset, mean velocity) rows for plotting."""
    lines = ["transition,offset,v_mean"]
    for g in gs.graphs:
        name = f"{g.from_family.value}->{g.to_family.value}"
        for off, v in g.steps:
            lines.append(f"{name},{off},{v}")
    return "\n".join(lines) + "\n"
