import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import arc_tip_by_integration, strip_lengths_by_integration
from pouchclutch.apps import (
    REFERENCE_STIFFNESS,
    STRIP_ANGLES,
    TAYLOR_THRESHOLD,
    FingerRig,
    PccConfig,
    arc_tip,
    bending_stiffness,
    calibrate_grip,
    calibrate_stiffness,
    clutch_slip,
    finger_angles,
    finger_excursions,
    grip_force,
    pcc_forward,
    rotation_invariance,
    strip_lengths,
    workspace_sample,
)
from pouchclutch.errors import InfeasibleGeometryError, ValidationError

CFG = PccConfig()


def test_stiffness_and_grip_anchors(calibrated):
    stiff = calibrate_stiffness(calibrated)
    grip = calibrate_grip(calibrated, stiff)
    k_off, k_on = bending_stiffness(0, stiff, calibrated), bending_stiffness(300, stiff, calibrated)
    assert (k_off, k_on) == pytest.approx(REFERENCE_STIFFNESS, abs=1e-12)
    assert k_on / k_off == pytest.approx(6.9, abs=0.05)
    f_off, f_on = grip_force(0, grip, stiff, calibrated), grip_force(300, grip, stiff, calibrated)
    assert (f_off, f_on) == pytest.approx((3.97, 6.88), abs=1e-12)
    assert 100 * (f_on / f_off - 1) == pytest.approx(73.3, abs=0.1)


def test_stiffness_monotone(calibrated):
    stiff = calibrate_stiffness(calibrated)
    k = [bending_stiffness(p, stiff, calibrated) for p in np.linspace(0, 300, 31)]
    assert np.all(np.diff(k) >= 0)


def test_straight_case_exact():
    st_ = pcc_forward(100.0, 100.0, 100.0)
    assert st_.tip == (0.0, 0.0, 100.0)
    assert st_.curvature == 0.0


def test_permutation_is_rotation():
    l = (98.0, 101.5, 100.7)
    base = np.array(pcc_forward(*l).tip)
    rot = pcc_forward(l[2], l[0], l[1]).tip  # strip i now carries what strip i-1 had
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    expected = [c * base[0] - s * base[1], s * base[0] + c * base[1], base[2]]
    assert np.allclose(rot, expected, atol=1e-9, rtol=0)


def test_taylor_branch_continuity():
    L = 100.0
    k = TAYLOR_THRESHOLD / L
    below, above = np.array(arc_tip(k * (1 - 1e-9), 0.7, L)), np.array(arc_tip(k * (1 + 1e-9), 0.7, L))
    assert np.abs(below - above).max() < 1e-9


def test_tip_matches_integration():
    for kappa, phi in [(1e-3, 0.3), (0.01, -2.0), (0.05, 2.5), (0.09, 1.0)]:
        assert np.allclose(arc_tip(kappa, phi, 100.0), arc_tip_by_integration(kappa, phi, 100.0), atol=1e-6, rtol=0)


def test_strip_lengths_match_offset_curves():
    for kappa, phi in [(0.02, 0.4), (0.06, -1.9)]:
        lengths = strip_lengths(kappa, phi, 100.0)
        measured = strip_lengths_by_integration(kappa, phi, 100.0, CFG.clutch_radius_Rc, STRIP_ANGLES)
        assert np.allclose(lengths, measured, rtol=1e-5)


@given(st.floats(0.0, 0.095), st.floats(-math.pi, math.pi), st.floats(20.0, 150.0))
def test_inverse_round_trip(kappa, phi, L):
    state = pcc_forward(*strip_lengths(kappa, phi, L))
    assert state.curvature == pytest.approx(kappa, abs=1e-9)
    assert state.arc_length == pytest.approx(L)
    assert np.allclose(state.tip, arc_tip(kappa, phi, L), atol=1e-8)


@given(st.floats(80, 120), st.floats(80, 120), st.floats(80, 120))
def test_chord_never_exceeds_arc(l1, l2, l3):
    try:
        st_ = pcc_forward(l1, l2, l3)
    except InfeasibleGeometryError:
        return
    assert np.linalg.norm(st_.tip) <= st_.arc_length + 1e-9


def test_infeasible_geometry():
    with pytest.raises(InfeasibleGeometryError):
        pcc_forward(1.0, 1.0, 100.0)
    with pytest.raises(ValidationError):
        pcc_forward(0.0, 100.0, 100.0)


def test_slip_behaviour(calibrated):
    assert clutch_slip(0, 0, CFG, calibrated) == CFG.rest_length_L0
    slips = [clutch_slip(pa, 0, CFG, calibrated) for pa in np.linspace(0, 50, 11)]
    assert np.all(np.diff(slips) >= 0)
    held = [clutch_slip(50, pc, CFG, calibrated) for pc in np.linspace(0, 200, 11)]
    assert np.all(np.diff(held) <= 0)
    assert clutch_slip(1e6, 0, CFG, calibrated) == CFG.rest_length_L0 + CFG.slip_cap_smax


def test_bends_toward_locked_clutch(calibrated):
    lengths = [clutch_slip(50, pc, CFG, calibrated) for pc in (200, 0, 0)]
    tip = pcc_forward(*lengths, CFG).tip
    assert tip[0] > 0 and abs(tip[1]) < 1e-9


def test_workspace(calibrated):
    res = workspace_sample((0, 50), [(0, 200)] * 3, (3, 3, 3, 3), CFG, calibrated)
    assert len(res.rows) + res.skipped == 81
    assert all(r[4] == 0.0 and r[5] == 0.0 for r in res.rows if r[0] == 0.0)
    assert rotation_invariance(res.xy) < 1e-6
    par = workspace_sample((0, 50), [(0, 200)] * 3, (3, 3, 3, 3), CFG, calibrated, workers=4)
    assert par.rows == res.rows


def test_workspace_validation(calibrated):
    with pytest.raises(ValidationError):
        workspace_sample((0, 50), [(0, 200)] * 2, (3, 3, 3, 3), CFG, calibrated)
    with pytest.raises(ValidationError):
        workspace_sample((50, 0), [(0, 200)] * 3, (3, 3, 3, 3), CFG, calibrated)


def test_finger_posture():
    rig = FingerRig()
    th1, th2 = finger_angles(15 * math.pi / 2, 0.0, rig)
    assert math.degrees(th1) == pytest.approx(90.0) and th2 == 0.0
    assert finger_angles(3.0, 4.0, rig)[0] * 2 == pytest.approx(finger_angles(6.0, 8.0, rig)[0])
    assert finger_excursions(*finger_angles(3.0, 4.0, rig), rig) == pytest.approx((3.0, 4.0))
    with pytest.raises(ValidationError):
        finger_angles(-1.0, 0.0)
