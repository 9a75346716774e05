"""Exception hierarchy for the synthesis pipeline.

Every error that can surface from plan processing carries enough context
(family, side, plan index) for the CLI and the HTTP service to report a
machine-readable failure without re-deriving state.
"""

from __future__ import annotations


class StepSynthError(Exception):
    """Base class for all pipeline errors."""

    code = "error"

    def __init__(self, message: str, *, plan_index: int | None = None):
        super().__init__(message)
        self.plan_index = plan_index


class ValidationError(StepSynthError):
    """Malformed input (plan, clip or file payload)."""

    code = "validation"


class EmptyFamily(StepSynthError):
    """A behaviour family has too few clips for one support side."""

    code = "empty_family"

    def __init__(self, family, side, count: int, minimum: int):
        super().__init__(
            f"family {family.value}/{side.value} has {count} clips, needs >= {minimum}"
        )
        self.family = family
        self.side = side
        self.count = count


class InvertedLimits(StepSynthError):
    """Raw distance limits cannot be stitched into an increasing ladder."""

    code = "inverted_limits"


class SideMismatch(StepSynthError):
    """A clip's support side does not match the footprint it is aligned to."""

    code = "side_mismatch"


class NoCandidates(StepSynthError):
    """No clips exist for the requested (family, support side)."""

    code = "no_candidates"


class NotEnclosed(StepSynthError):
    """No 4-subset of candidate end poses encloses the target point."""

    code = "not_enclosed"

    def __init__(self, joint: str, *, plan_index: int | None = None):
        super().__init__(f"target {joint} point not enclosed by any candidate polygon",
                         plan_index=plan_index)
        self.joint = joint


class DegenerateVertices(StepSynthError):
    """Polygon vertices are collinear on the ground plane."""

    code = "degenerate_vertices"


class RankDeficient(StepSynthError):
    """Foot and toe columns of the joint-weight system coincide."""

    code = "rank_deficient"


class OverlappingPins(StepSynthError):
    """Two contact pins for the same foot overlap in time."""

    code = "overlapping_pins"


class AmbiguousPattern(StepSynthError):
    """Jump footprints imply lift/land feet crossing; user must fix the plan."""

    code = "ambiguous_pattern"


class UnknownPair(StepSynthError):
    """Behaviour pair absent from the velocity-characteristic table."""

    code = "unknown_pair"


class MissingGraph(StepSynthError):
    """No transition graph stored for a behaviour pair or its inverse."""

    code = "missing_graph"


class NoPreviousFootprints(StepSynthError):
    """Reach correction has no previous footprints to divide over."""

    code = "no_previous_footprints"


class UnresolvablePlan(StepSynthError):
    """Deadlock resolution hit the insertion cap."""

    code = "unresolvable_plan"


class BandViolation(StepSynthError):
    """Requested step geometry is outside the generator's family band."""

    code = "band_violation"


class NotFitted(StepSynthError):
    """Estimator used before fit()."""

    code = "not_fitted"
