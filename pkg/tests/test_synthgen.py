import numpy as np
import pytest

from stepsynth.database import build, validate_clip
from stepsynth.errors import BandViolation, ValidationError
from stepsynth.formats import clip_to_json, to_canonical_json
from stepsynth.synthgen import (DEFAULT_COUNTS, gen_database, gen_step,
                                gen_transition_sequence)
from stepsynth.transforms import to_global
from stepsynth.types import Family, Side, WALKING, foot_pose


def test_degenerate_step_start_equals_end():
    p = foot_pose((-0.2, 0.0, 0.1), 0.0)
    clip = gen_step(WALKING, Side.RIGHT, p, p, 1.2)
    validate_clip(clip)
    acting = clip.frames.foot_arrays(Side.LEFT)[0]
    assert np.allclose(acting, acting[0], atol=1e-12)


def test_end_frame_matches_requested_end_pose():
    start = foot_pose((-0.2, 0.0, 0.0), 0.0)
    end = foot_pose((-0.14, 0.0, 0.62), 0.12)
    clip = gen_step(WALKING, Side.RIGHT, start, end, 1.3)
    want = to_global(end, clip.support)
    got = clip.frames.foot_pose(clip.acting_side, clip.n_frames - 1)
    assert np.allclose(got.foot_pos, want.foot_pos, atol=1e-9)
    assert got.yaw == pytest.approx(want.yaw, abs=1e-9)


def test_support_stationary_for_ground_families():
    start = foot_pose((-0.2, 0.0, 0.0), 0.0)
    end = foot_pose((-0.2, 0.0, 0.7), 0.0)
    clip = gen_step(WALKING, Side.RIGHT, start, end, 1.2)
    sup = clip.frames.foot_arrays(Side.RIGHT)[0]
    assert np.all(sup == sup[0])


def test_band_violation():
    start = foot_pose((-0.2, 0.0, 0.0), 0.0)
    end = foot_pose((-0.2, 0.0, 5.0), 0.0)
    with pytest.raises(BandViolation):
        gen_step(WALKING, Side.RIGHT, start, end, 1.2)


def test_root_moves_at_constant_velocity():
    start = foot_pose((-0.2, 0.0, 0.0), 0.0)
    end = foot_pose((-0.2, 0.0, 0.66), 0.0)
    clip = gen_step(WALKING, Side.RIGHT, start, end, 1.1, fps=60)
    speeds = np.linalg.norm(np.diff(clip.frames.root_pos, axis=0), axis=1) * 60
    assert np.allclose(speeds, 1.1, atol=1e-9)


class TestGenDatabase:
    def test_default_scale_600_clips(self, corpus600):
        assert len(corpus600) == 600

    def test_seed_determinism(self):
        counts = {fam: 5 for fam in DEFAULT_COUNTS}
        a = gen_database(counts, seed=42)
        b = gen_database(counts, seed=42)
        assert [to_canonical_json(clip_to_json(c)) for c in a] == \
               [to_canonical_json(clip_to_json(c)) for c in b]

    def test_mirrors_included_per_side(self, db_small):
        for fam in Family:
            if fam is Family.UNREACHABLE:
                continue
            assert len(db_small.clips_for(fam, Side.LEFT)) >= 4
            assert len(db_small.clips_for(fam, Side.RIGHT)) >= 4

    def test_raw_bands_match_configuration_exactly(self, db600):
        # first two clips per family pin the band edges
        assert db600.raw_limits[Family.WALKING].lo == pytest.approx(0.3, abs=1e-12)
        assert db600.raw_limits[Family.WALKING].hi == pytest.approx(0.9, abs=1e-12)
        assert db600.raw_limits[Family.RUNNING].lo == pytest.approx(0.7, abs=1e-12)
        assert db600.raw_limits[Family.JUMPING].lo == pytest.approx(1.4, abs=1e-12)

    def test_all_clips_validate(self, corpus600):
        for clip in corpus600[:100]:
            validate_clip(clip)


class TestTransitionSequence:
    def test_root_follows_ramp_exactly(self):
        ramp = (1.1, 1.6, 2.3, 2.9)
        seq = gen_transition_sequence(Family.WALKING, Family.RUNNING, ramp,
                                      frames_per_step=48)
        F = 48
        for i, v in enumerate(ramp):
            dz = seq.frames.root_pos[(i + 1) * F, 2] - seq.frames.root_pos[i * F, 2]
            assert dz * 60 / F == pytest.approx(v, abs=1e-9)

    def test_stance_feet_planted_exactly(self):
        seq = gen_transition_sequence(Family.WALKING, Family.RUNNING,
                                      (1.0, 1.5, 2.0), frames_per_step=40)
        F = 40
        # step 1 swings the right foot; the left must be bit-still
        left = seq.frames.left_foot[F:2 * F + 1]
        assert np.all(left == left[0])

    def test_requires_two_steps(self):
        with pytest.raises(ValidationError):
            gen_transition_sequence(Family.WALKING, Family.RUNNING, (1.0,))
