import math
import sys

import pytest
import setpath  # noqa:F401, must come before 'import gripsim'
from hypothesis import given, settings
from hypothesis import strategies as st

from gripsim import screw
from gripsim.screw import (Constant, Free, HardStop, LinearSpring,
                           MechanismState, Mode, ScrewDrive,
                           ScrewDriveParams, Tabulated)
from gripsim.utils import InvalidParameters, StallError


def test_default_params():
    params = ScrewDriveParams()
    assert params.gear_ratio == pytest.approx(21 / 12)
    assert params.lead == pytest.approx(21 * math.tan(math.radians(20)))
    assert screw.switching_threshold(params) == pytest.approx(20.6061,
                                                              rel=1e-4)
    assert screw.stall_load(params) == pytest.approx(32.708, rel=1e-4)


@pytest.mark.parametrize("kwargs", [
    pytest.param({'r_g1': 0}, id='radius'),
    pytest.param({'theta_th': math.pi / 2}, id='lead-angle'),
    pytest.param({'mu_st': -0.1}, id='friction'),
    pytest.param({'tau_pre_max': -1}, id='preload'),
    pytest.param({'tau_m_max': 0}, id='motor'),
    pytest.param({'kinetic_ratio': 1.5}, id='kinetic'),
    pytest.param({'max_step': 0}, id='step'),
])
def test_invalid_params(kwargs):
    with pytest.raises(InvalidParameters):
        ScrewDriveParams(**kwargs)


def test_input_torque():
    params = ScrewDriveParams()
    assert screw.input_torque(params, 210.0) == pytest.approx(120.0)


def test_thread_statics():
    theta = math.radians(20)
    f_sh, tau_sh = screw.thread_statics(10.0, 0.0, theta, 12.0)
    assert f_sh == pytest.approx(10 * math.cos(theta))
    assert tau_sh == pytest.approx(120 * math.sin(theta))
    f_sh, tau_sh = screw.thread_statics(10.0, 3.0, theta, 12.0)
    assert f_sh < 10 * math.cos(theta)
    with pytest.raises(InvalidParameters):
        screw.thread_statics(-1.0, 0.0, theta, 12.0)


@settings(max_examples=1000, deadline=None)
@given(r_g1=st.floats(1, 50), r_g2=st.floats(1, 50),
       theta_th=st.floats(0.01, 1.5), tau_pre_max=st.floats(0, 1000))
def test_threshold_inverts_preload(r_g1, r_g2, theta_th, tau_pre_max):
    params = ScrewDriveParams(r_g1=r_g1, r_g2=r_g2, theta_th=theta_th,
                              tau_pre_max=tau_pre_max)
    f_sw = screw.switching_threshold(params)
    assert screw.required_preload_torque(params, f_sw) == \
        pytest.approx(tau_pre_max, rel=1e-9, abs=1e-12)


def test_validate_design_default_passes():
    report = screw.validate_design(ScrewDriveParams())
    assert report.passed
    assert report.failures() == []
    assert report.load_window[1] == pytest.approx(
        screw.switching_threshold(ScrewDriveParams()))
    assert report['motor_bound'].margin == pytest.approx(250 * 12 / 21 - 90)


@pytest.mark.parametrize("kwargs, failing", [
    pytest.param({'tau_pre_max': 200}, 'motor_bound', id='motor-bound'),
    pytest.param({'mu_st': 3.0}, 'lead_angle', id='self-locking-thread'),
    pytest.param({'tau_pre_max': 0}, 'translation_window', id='no-preload'),
])
def test_validate_design_failures(kwargs, failing):
    report = screw.validate_design(ScrewDriveParams(**kwargs))
    assert not report.passed
    assert [check.name for check in report.failures()] == [failing]


def test_validate_design_frictionless():
    report = screw.validate_design(ScrewDriveParams(mu_st=0))
    assert report['lead_angle'].margin == math.inf
    with pytest.raises(KeyError):
        report['unknown']


def test_preload_from_slit():
    assert screw.preload_from_slit(2.0) == pytest.approx(90.0)
    assert screw.preload_from_slit(1.25) == pytest.approx(45.0)
    assert screw.preload_from_slit(0.0) == 0.0
    with pytest.raises(InvalidParameters, match="outside"):
        screw.preload_from_slit(3.5)
    with pytest.raises(InvalidParameters, match="decrease"):
        screw.preload_from_slit(1.0, [(0, 10), (2, 5)])
    # the widest slit breaks the motor bound of the default drive
    wide = ScrewDriveParams(tau_pre_max=screw.preload_from_slit(3.0))
    assert not screw.validate_design(wide)['motor_bound'].passed


def test_linear_spring_crossing():
    spring = LinearSpring(stiffness=2.0, rest=1.0)
    assert spring.force(3.0) == 4.0
    assert spring.crossing(1.0, 10.0, 6.0) == pytest.approx(4.0)
    assert spring.crossing(1.0, 3.0, 6.0) is None
    assert spring.crossing(5.0, 10.0, 6.0) == 5.0
    assert LinearSpring(stiffness=0).crossing(0, 10, 1) is None


def test_tabulated_load():
    table = Tabulated(x=(0.0, 1.0, 2.0), f=(0.0, 5.0, 20.0), rigid_end=True)
    assert table.force(1.5) == pytest.approx(12.5)
    assert table.crossing(0.0, 2.0, 10.0) == pytest.approx(4 / 3)
    assert table.blocks(2.0, 1)
    assert not table.blocks(2.0, -1)
    with pytest.raises(InvalidParameters):
        Tabulated(x=(0.0, 2.0, 1.0), f=(0, 1, 2))


def test_step_bounds():
    params = ScrewDriveParams()
    assert screw.step(params, MechanismState(), Free(), 0.0) == \
        MechanismState()
    with pytest.raises(InvalidParameters, match="max_step"):
        screw.step(params, MechanismState(), Free(), 0.02)


def test_translation_under_light_load():
    params = ScrewDriveParams()
    state = screw.step(params, MechanismState(), Constant(value=15.0), 0.01)
    assert state.mode is Mode.TRANSLATION
    assert state.x_shaft == pytest.approx(params.lead * 0.01)
    assert state.theta_sh == 0.0
    assert state.tau_m == pytest.approx(params.lead * 15.0)


@pytest.mark.parametrize("kinetic_ratio, mode", [
    pytest.param(1.0, Mode.TRANSLATION, id='no-hysteresis'),
    pytest.param(0.5, Mode.ROTATION, id='hysteresis'),
])
def test_switch_back_uses_kinetic_friction(kinetic_ratio, mode):
    params = ScrewDriveParams(kinetic_ratio=kinetic_ratio)
    rotating = MechanismState(mode=Mode.ROTATION)
    state = screw.step(params, rotating, Constant(value=15.0), 0.01)
    assert state.mode is mode


def test_rigid_stop_turns_the_shaft():
    params = ScrewDriveParams()
    drive = ScrewDrive(params, HardStop(position=1.0))
    drive.rotate(0.5)
    assert drive.state.mode is Mode.ROTATION
    assert drive.state.x_shaft == 1.0
    assert drive.state.f_ex == pytest.approx(
        screw.switching_threshold(params))
    assert drive.state.theta_m == pytest.approx(0.5)
    assert drive.state.theta_sh > 0


def sweep(tau_pre_max):
    params = ScrewDriveParams(tau_pre_max=tau_pre_max)
    return params, screw.motor_sweep(params, LinearSpring(stiffness=2.0),
                                     4.0, 0.01)


def test_moderate_preload_switches_once():
    params, trace = sweep(90.0)
    f_sw = screw.switching_threshold(params)
    modes = [state.mode for state in trace]
    switch = modes.index(Mode.ROTATION)
    assert Mode.TRANSLATION not in modes[switch:]
    assert all(state.theta_sh == 0 for state in trace[:switch])
    assert screw.peak_load(trace) == pytest.approx(f_sw, rel=1e-9)
    rotating = trace[switch:]
    for a, b in zip(rotating, rotating[1:]):
        slope = (b.theta_sh - a.theta_sh) / (b.theta_m - a.theta_m)
        assert slope == pytest.approx(params.r_g2 / params.r_g1, rel=1e-9)
        assert b.x_shaft == a.x_shaft
    assert trace[-1].theta_m == pytest.approx(4.0)


def test_zero_preload_only_rotates():
    params, trace = sweep(0.0)
    assert all(state.x_shaft == 0 for state in trace)
    assert all(state.mode is Mode.ROTATION for state in trace[1:])
    for state in trace:
        assert state.theta_sh == pytest.approx(
            params.gear_ratio * state.theta_m, abs=1e-12)


def test_excess_preload_stalls_without_switching():
    with pytest.raises(StallError) as info:
        sweep(200.0)
    error = info.value
    assert error.trace
    assert all(state.mode is Mode.TRANSLATION for state in error.trace)
    assert error.state.f_ex == pytest.approx(
        screw.stall_load(ScrewDriveParams()))
    assert error.tau_required > 0


def test_peak_load_grows_with_preload():
    peaks = []
    for tau in (0.0, 30.0, 60.0, 90.0, 120.0):
        peaks.append(screw.peak_load(sweep(tau)[1]))
    assert peaks == sorted(peaks)
    with pytest.raises(InvalidParameters):
        screw.peak_load([])


def test_rotation_stalls_weak_motor():
    # slipping a 90 N·mm slider through the gears needs 157.5 N·mm
    params = ScrewDriveParams(tau_m_max=150.0)
    with pytest.raises(StallError, match="slipping"):
        screw.step(params, MechanismState(), Constant(value=25.0), 0.01)


def test_slip_onset_needs_the_static_preload():
    # kinetic friction alone (131.25 N·mm) is within the motor, the
    # static onset (262.5 N·mm) is not
    params = ScrewDriveParams(tau_pre_max=150.0, kinetic_ratio=0.5)
    with pytest.raises(StallError, match="slipping") as info:
        screw.step(params, MechanismState(), Constant(value=40.0), 0.01)
    assert info.value.tau_required == pytest.approx(262.5)
    rotating = MechanismState(mode=Mode.ROTATION)
    state = screw.step(params, rotating, Constant(value=40.0), 0.01)
    assert state.tau_m == pytest.approx(131.25)


def test_drive_trace_and_load_swap():
    drive = ScrewDrive()
    drive.step(0.01)
    drive.set_load(Constant(value=1.0))
    drive.step(0.01)
    assert len(drive.trace) == 3
    assert drive.trace[-1].f_ex == 1.0
    drive.rotate(-0.02)
    assert drive.state.x_shaft == pytest.approx(0.0, abs=1e-12)


if __name__ == '__main__':
    pytest.main(sys.argv)
