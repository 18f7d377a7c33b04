import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xfl.errors import InfeasibleError, StackError, UnderdeterminedError
from xfl.stack import (AcousticConstants, Layer, LayerStack, ModeSpec, calibrate_electrode_offset,
                       calibrate_velocity, coupled_overtone_orders, dispersion_table,
                       frequency_at_thickness, frequency_sensitivity, lateral_cutoff,
                       mode_frequency, thickness_for_frequency, trim_depth_for_offset)


def closed_form_vh(h_nm, order, lam_um, f_ghz, v_lat=4000.0):
    # direct inversion of the dispersion relation
    lat = v_lat / (lam_um * 1e-6)
    return 2 * h_nm * 1e-9 / order * math.sqrt((f_ghz * 1e9) ** 2 - lat**2)


def test_mode_frequency_example():
    k = AcousticConstants(3498.0, 4000.0)
    f = mode_frequency(LayerStack.uniform(4, 110.0, k), ModeSpec(12, 8.0))
    assert f == pytest.approx(47.70, abs=0.01)
    # lateral term alone would be 0.5 GHz; its quadrature contribution is tiny
    assert f - 12 * 3498.0 / (2 * 440e-9) / 1e9 < 0.01


def test_infinite_wavelength_limit():
    k = AcousticConstants(3500.0, 4000.0)
    f = frequency_at_thickness(200.0, ModeSpec(3, 1e12), k)
    assert f == pytest.approx(3 * 3500.0 / (2 * 200e-9) / 1e9, rel=1e-12)


def test_thickness_for_frequency_a3(material):
    h = thickness_for_frequency(50.0, ModeSpec(3, 8.0), material)
    assert 105.0 <= h <= 111.0


def test_thickness_at_cutoff_is_infeasible(plain_material):
    mode = ModeSpec(3, 8.0)
    fc = lateral_cutoff(mode, plain_material)
    assert fc == pytest.approx(0.5)
    with pytest.raises(InfeasibleError):
        thickness_for_frequency(fc, mode, plain_material)
    with pytest.raises(InfeasibleError):
        thickness_for_frequency(0.1, mode, plain_material)


def test_single_point_calibration_matches_inversion():
    for h, f, ref in ((440.0, 47.7, 3498.0), (427.0, 49.6, 3530.0)):
        cal = calibrate_velocity([(h, 12, 8.0, f)])
        assert cal.constants.v_thickness == pytest.approx(closed_form_vh(h, 12, 8.0, f), rel=1e-9)
        assert cal.constants.v_thickness == pytest.approx(ref, abs=1.0)
        assert abs(cal.residuals[0]) < 1e-9


def test_identical_points_zero_residual():
    cal = calibrate_velocity([(440.0, 12, 8.0, 47.7)] * 2)
    assert max(abs(r) for r in cal.residuals) < 1e-9


def test_joint_calibration_residuals(material, reference_cfg):
    # one velocity cannot hit both rows exactly; the misfit splits evenly
    res = reference_cfg.calibration.residuals
    assert material.v_thickness == pytest.approx(3514.2, abs=0.1)
    assert res[0] == pytest.approx(0.2239, abs=1e-3)
    assert res[1] == pytest.approx(-0.2173, abs=1e-3)


def test_underdetermined_calibration():
    with pytest.raises(UnderdeterminedError):
        calibrate_velocity([(440.0, 12, 8.0, 47.7)], v_lateral=None)
    # same h/N and wavelength carries no new information
    with pytest.raises(UnderdeterminedError):
        calibrate_velocity([(440.0, 12, 8.0, 47.7), (220.0, 6, 8.0, 47.7)], v_lateral=None)


def test_sensitivity_examples(material):
    s1 = frequency_sensitivity(LayerStack.uniform(1, 110.0, material), ModeSpec(3))
    s4 = frequency_sensitivity(LayerStack.uniform(4, 110.0, material), ModeSpec(12))
    assert s1 == pytest.approx(-0.45, abs=0.02)
    assert s4 == pytest.approx(-0.11, abs=0.005)
    assert s1 / s4 == pytest.approx(4.0, rel=0.01)


def test_sensitivity_infinite_wavelength(plain_material):
    st_ = LayerStack.uniform(1, 300.0, plain_material)
    mode = ModeSpec(5, 1e12)
    assert frequency_sensitivity(st_, mode) == pytest.approx(-mode_frequency(st_, mode) / 300.0,
                                                              rel=1e-12)


def test_trim_depths(material):
    four = LayerStack.uniform(4, 110.0, material)
    one = LayerStack.uniform(1, 110.0, material)
    assert 16.0 <= trim_depth_for_offset(four, ModeSpec(12), 1.9) <= 17.0
    assert trim_depth_for_offset(one, ModeSpec(3), 1.9) == pytest.approx(4.0, abs=0.5)
    assert trim_depth_for_offset(four, ModeSpec(12), 0.0) == 0.0


def test_trim_depth_bisection_oracle(material):
    from scipy.optimize import brentq
    four = LayerStack.uniform(4, 110.0, material)
    mode = ModeSpec(12)
    f0 = mode_frequency(four, mode)
    d = brentq(lambda x: frequency_at_thickness(440.0 - x, mode, material) - f0 - 1.9, 0, 200)
    assert trim_depth_for_offset(four, mode, 1.9) == pytest.approx(d, rel=1e-9)


def test_trim_infeasible(material):
    one = LayerStack.uniform(1, 110.0, material)
    # a heavy electrode load makes the required depth exceed the film itself
    with pytest.raises(InfeasibleError):
        trim_depth_for_offset(one, ModeSpec(3), 40.0, electrode_offset=500.0)
    with pytest.raises(InfeasibleError):
        trim_depth_for_offset(one, ModeSpec(3), -1.0)


def test_electrode_offset_round_trip(material):
    four = LayerStack.uniform(4, 110.0, material)
    off = calibrate_electrode_offset(four, ModeSpec(12), 1.9, 13.0)
    assert off == pytest.approx(-53.6, abs=0.2)
    assert trim_depth_for_offset(four, ModeSpec(12), 1.9, off) == pytest.approx(13.0, abs=1e-6)


def test_coupled_orders():
    k = AcousticConstants(3500.0)
    strong = lambda m: [n for n, c in coupled_overtone_orders(LayerStack.uniform(m, 110.0, k), 20)
                        if c == "strong"]
    assert strong(4) == [4, 12, 20]
    assert strong(2) == [2, 6, 10, 14, 18]
    assert strong(1) == [1, 3, 5, 7, 9, 11, 13, 15, 17, 19]


def test_non_uniform_stack_flags_neighbours():
    k = AcousticConstants(3500.0)
    st_ = LayerStack(tuple(Layer(t, (-1) ** i) for i, t in enumerate((110, 110, 110, 97))), k)
    with pytest.warns(UserWarning, match="partially"):
        out = dict(coupled_overtone_orders(st_, 14))
    assert out[11] == out[13] == "partial"
    assert out[12] == "strong"


def test_non_p3f_rejected():
    k = AcousticConstants(3500.0)
    with pytest.raises(StackError):
        coupled_overtone_orders(LayerStack.uniform(4, 110.0, k, alternating=False), 12)


def test_implausible_velocity_warns():
    with pytest.warns(UserWarning):
        AcousticConstants(50000.0)
    with pytest.raises(ValueError):
        AcousticConstants(-1.0)


def test_dispersion_table_rows(material):
    rows = dispersion_table([427.0, 440.0], [12], 8.0, material)
    assert [(h, n) for h, n, _ in rows] == [(427.0, 12), (440.0, 12)]
    assert rows[0][2] > rows[1][2]


# properties

h_st = st.floats(20.0, 5000.0)
n_st = st.integers(1, 40)
lam_st = st.floats(0.5, 100.0)


@given(h_st, n_st, lam_st, st.floats(1.001, 2.0))
def test_decreasing_in_thickness(h, n, lam, s):
    k = AcousticConstants(3500.0)
    assert frequency_at_thickness(h * s, ModeSpec(n, lam), k) < frequency_at_thickness(h, ModeSpec(n, lam), k)


@given(h_st, n_st, lam_st)
def test_increasing_in_order(h, n, lam):
    k = AcousticConstants(3500.0)
    assert frequency_at_thickness(h, ModeSpec(n + 1, lam), k) > frequency_at_thickness(h, ModeSpec(n, lam), k)


@given(h_st, n_st, lam_st)
def test_inversion_identity(h, n, lam):
    k = AcousticConstants(3500.0)
    mode = ModeSpec(n, lam)
    assert thickness_for_frequency(frequency_at_thickness(h, mode, k), mode, k) == pytest.approx(h, rel=1e-9)


@given(h_st, n_st, lam_st, st.floats(0.1, 10.0))
def test_scaling(h, n, lam, s):
    k = AcousticConstants(3500.0)
    f1 = frequency_at_thickness(h, ModeSpec(n, lam), k)
    f2 = frequency_at_thickness(h * s, ModeSpec(n, lam * s), k)
    assert f2 == pytest.approx(f1 / s, rel=1e-12)


@given(st.integers(1, 8), st.floats(30.0, 500.0), st.integers(0, 5), lam_st)
def test_p3f_equivalence(m, t, n, lam):
    k = AcousticConstants(3500.0)
    order = 2 * n + 1
    multi = mode_frequency(LayerStack.uniform(m, t, k), ModeSpec(m * order, lam))
    single = mode_frequency(LayerStack.uniform(1, t, k), ModeSpec(order, lam))
    assert multi == pytest.approx(single, rel=1e-12)


@given(st.floats(30.0, 3000.0), n_st, lam_st)
def test_sensitivity_matches_finite_difference(h, n, lam):
    k = AcousticConstants(3500.0)
    mode = ModeSpec(n, lam)
    d = h * 1e-5
    fd = (frequency_at_thickness(h + d, mode, k) - frequency_at_thickness(h - d, mode, k)) / (2 * d)
    assert frequency_sensitivity(LayerStack.uniform(1, h, k), mode) == pytest.approx(fd, rel=1e-6)
