import pytest

from pantilt.calibration import calibrate_axis
from pantilt.kinematics import PanTiltRig
from pantilt.simulate import (
    REFERENCE_PAN_FRAMES,
    REFERENCE_TILT_FRAMES,
    generate_axis_sweep,
    make_reference_rig,
    sweep_angles,
)


@pytest.fixture(scope="session")
def reference_rig():
    return make_reference_rig()


@pytest.fixture(scope="session")
def reference_sweeps(reference_rig):
    """Noiseless end-to-end pan and tilt sweeps of the reference fixture."""
    pan = generate_axis_sweep(reference_rig, "pan", sweep_angles(REFERENCE_PAN_FRAMES))
    tilt = generate_axis_sweep(reference_rig, "tilt", sweep_angles(REFERENCE_TILT_FRAMES))
    return pan, tilt


@pytest.fixture(scope="session")
def reference_reports(reference_sweeps):
    pan_obs, tilt_obs = reference_sweeps
    return calibrate_axis(pan_obs), calibrate_axis(tilt_obs)


@pytest.fixture(scope="session")
def calibrated_reference(reference_reports):
    pan_report, tilt_report = reference_reports
    return PanTiltRig(pan_report.axis, tilt_report.axis)
