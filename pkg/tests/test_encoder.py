import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pouchclutch.encoder import (
    FORWARD_CYCLE,
    IncrementalDecoder,
    MotionProfile,
    decode_step,
    detect_index,
    generate_pattern,
    read_profile_csv,
    sample_channels,
    track_profile,
)
from pouchclutch.errors import ValidationError

PATTERN = generate_pattern()


def test_pattern_geometry():
    assert PATTERN.period_P == 4.0
    assert PATTERN.electrode_offset_d == 1.0
    s = np.arange(0, 40, 0.01) + 0.005
    duty = np.mean([PATTERN.track(v) for v in s])
    assert duty == pytest.approx(0.5, abs=1e-3)


def test_gray_sequence_forward():
    states = [sample_channels(PATTERN, k + 0.5) for k in range(9)]
    assert states[:5] == [(1, 1), (1, 0), (0, 0), (0, 1), (1, 1)]
    for a, b in zip(states, states[1:]):
        assert decode_step(a, b) == 1


def test_gray_sequence_is_single_bit():
    xs = np.arange(0.0, 36.0, 0.01)
    states = [sample_channels(PATTERN, x) for x in xs]
    for a, b in zip(states, states[1:]):
        assert decode_step(a, b) in (0, 1)


def test_decode_step_antisymmetry():
    for a, b in zip(FORWARD_CYCLE, FORWARD_CYCLE[1:] + FORWARD_CYCLE[:1]):
        assert decode_step(a, b) == 1
        assert decode_step(b, a) == -1


def test_decode_step_exhaustive():
    for a, b in itertools.product(FORWARD_CYCLE, repeat=2):
        r = decode_step(a, b)
        bits = (a[0] != b[0]) + (a[1] != b[1])
        assert (r == 0) == (bits == 0)
        assert (r is None) == (bits == 2)


def test_invalid_levels():
    with pytest.raises(ValidationError):
        decode_step((1, 2), (1, 1))


def test_index_signature_unreachable_in_periodic_region():
    sig = PATTERN.index_signature
    assert any(decode_step(a, b) is None for a, b in zip(sig, sig[1:]))
    walk = [FORWARD_CYCLE[i % 4] for i in range(50)]
    assert not any(detect_index(walk[: i + 1], sig) for i in range(len(walk)))


def test_pattern_validation():
    with pytest.raises(ValidationError):
        generate_pattern(1.0, tape_length=11.0)
    with pytest.raises(ValidationError):
        generate_pattern(0.0)
    with pytest.raises(ValidationError):
        generate_pattern(1.0, electrode_offset_d=2.0)
    assert generate_pattern(1.0, electrode_offset_d=5.0).period_P == 4.0


def test_off_tape_sampling_rejected():
    with pytest.raises(ValidationError):
        sample_channels(PATTERN, -5.0)
    with pytest.raises(ValidationError):
        sample_channels(PATTERN, 41.0)


def test_double_bit_transition_faults():
    dec = IncrementalDecoder(PATTERN.index_signature, debounce=1)
    for t, s in enumerate([(1, 1), (1, 0), (0, 1), (1, 1), (1, 0)]):
        dec.feed(s, float(t))
    dec.finish()
    assert dec.faults == [2.0]
    assert dec.state.fault == "missed-state"


def test_single_sample_glitch_suppressed():
    dec = IncrementalDecoder(PATTERN.index_signature, debounce=2)
    for s in [(1, 1)] * 3 + [(1, 0)] + [(1, 1)] * 3 + [(0, 1)] + [(1, 1)] * 3:
        dec.feed(s)
    assert dec.count == 0 and not dec.faults
    for s in [(1, 0)] * 2:
        dec.feed(s)
    assert dec.count == 1


def test_glitchy_replay_stays_fault_free():
    # at this rate two-sample glitches occur, so the filter needs three samples
    prof = MotionProfile.from_waypoints([0.0, 20.0, 5.0], 1.0)
    res = track_profile(PATTERN, prof, debounce=3, glitch_rate=0.02, seed=3)
    assert res.valid
    assert res.max_abs_error <= 1.0


def test_index_zeroes_once_from_tape_start():
    prof = MotionProfile.from_waypoints([PATTERN.x_min, 30.0, 2.0], 1.0)
    res = track_profile(PATTERN, prof)
    assert res.valid
    assert len(res.zeroing_times) == 1
    assert res.calibrated[-1]
    assert res.final_state.position_count == 2
    assert np.abs(res.errors[res.calibrated]).max() <= 1.0


def test_no_zeroing_mid_tape():
    prof = MotionProfile.from_waypoints([3.0, 35.0, 1.0, 30.0], 2.0)
    res = track_profile(PATTERN, prof)
    assert res.zeroing_times == [] and res.valid
    assert not res.calibrated.any()


def test_random_periodic_walk_never_matches_index():
    rng = np.random.default_rng(12345)
    idx = np.cumsum(rng.choice([-1, 0, 1], 10**6)) % 4
    dec = IncrementalDecoder(PATTERN.index_signature, debounce=1)
    for i in idx:
        dec.feed(FORWARD_CYCLE[i])
    dec.finish()
    assert dec.zeroings == [] and dec.faults == []


def test_triangle_wave_returns_to_start():
    prof = MotionProfile.from_waypoints([0.0, 15.0, 0.0] * 3, 2.0)
    res = track_profile(PATTERN, prof)
    assert res.valid
    assert abs(res.final_state.position_count) <= 1


def test_backward_segment_decrements():
    prof = MotionProfile.from_waypoints([10.0, 20.0, 12.0], 1.0)
    res = track_profile(PATTERN, prof)
    assert res.final_state.position_count == 2
    assert res.max_abs_error <= 1.0


def test_undersampling_faults():
    prof = MotionProfile.from_waypoints([0.0, 30.0], 2.0)
    res = track_profile(PATTERN, prof, sample_rate=1.0)
    assert not res.valid
    assert res.first_fault_time is not None


def test_pressure_distortion_grows():
    prof = MotionProfile.from_waypoints([0.0, 20.0], 1.0)
    errs = [track_profile(PATTERN, prof, pressure_kpa=p).max_abs_error for p in (0, 100, 200, 300)]
    assert errs == sorted(errs)
    assert errs[2] <= 1.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 35.0), min_size=2, max_size=5), st.floats(0.2, 2.0))
def test_replay_error_bound(waypoints, speed):
    if len(set(waypoints)) < 2:
        return
    res = track_profile(PATTERN, MotionProfile.from_waypoints(waypoints, speed))
    assert res.valid
    assert res.max_abs_error <= 1.0


def test_profile_validation():
    with pytest.raises(ValidationError):
        MotionProfile(np.array([0.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValidationError):
        MotionProfile(np.array([0.0]), np.array([0.0]))
    with pytest.raises(ValidationError):
        MotionProfile.from_waypoints([0.0, 1.0], 0.0)


def test_csv_reader(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("time_s,displacement_mm\n0,0\n1,0.5\n2,1.5\n")
    prof = read_profile_csv(good)
    assert prof.displacements.tolist() == [0.0, 0.5, 1.5]
    empty = tmp_path / "empty.csv"
    empty.write_text("time_s,displacement_mm\n")
    with pytest.raises(ValidationError, match="empty"):
        read_profile_csv(empty)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0\n1,x\n")
    with pytest.raises(ValidationError, match=":2:"):
        read_profile_csv(bad)
    back = tmp_path / "back.csv"
    back.write_text("0,0\n1,1\n1,2\n")
    with pytest.raises(ValidationError, match=":3:"):
        read_profile_csv(back)
