"""Calibration and inverse-kinematics aiming for arbitrarily assembled pan-tilt
camera platforms.

The toolkit recovers the 3D direction and position of the pan and tilt
rotation axes from checkerboard-corner trajectories, models the rigid pan-tilt
transform, and solves the servo angles that point the camera's optical axis at
a world target — all verifiable against the built-in synthetic-rig simulator.
"""
from .calibration import (
    CalibrationError,
    CalibrationReport,
    CircleFit,
    DegenerateRotation,
    DegenerateTrajectory,
    PlaneFamilyFit,
    TooFewFrames,
    calibrate_axis,
    calibrate_rig,
    fit_circle_centers,
    fit_plane_family,
    recover_frame_angles,
)
from .estimators import AxisCalibrator, PanTiltAimer, PanTiltCalibrator
from .evaluate import (
    DEFAULT_INTRINSICS,
    BehindCamera,
    CameraIntrinsics,
    EmptyBatch,
    TargetingReport,
    TrialRecord,
    compute_metrics,
    ideal_baseline_pose,
    project_pinhole,
    run_targeting_experiment,
)
from .geometry import (
    AxisModel,
    axis_line_distance,
    axis_rotation_matrix,
    is_rigid_transform,
    line_angle,
    point_line_distance,
    rodrigues_rotation,
    rotate_about_axis,
    rotate_points_about_axis,
    transform_point,
    translation_matrix,
    unit_vector,
    vector_angle,
)
from .kinematics import (
    IKConfig,
    IKSolution,
    PanTiltPose,
    PanTiltRig,
    ParallelAxesWarning,
    forward_transform,
    ik_jacobian,
    solve_ik,
    world_from_local,
)
from .observations import BoardSpec, CornerObservations
from .simulate import (
    NoiseSpec,
    SimRigParams,
    corner_rest_positions,
    generate_axis_sweep,
    make_reference_rig,
    make_skewed_rig,
    sweep_angles,
)

__version__ = "0.1.0"

__all__ = [
    "AxisCalibrator",
    "AxisModel",
    "BehindCamera",
    "BoardSpec",
    "CalibrationError",
    "CalibrationReport",
    "CameraIntrinsics",
    "CircleFit",
    "CornerObservations",
    "DEFAULT_INTRINSICS",
    "DegenerateRotation",
    "DegenerateTrajectory",
    "EmptyBatch",
    "IKConfig",
    "IKSolution",
    "NoiseSpec",
    "PanTiltAimer",
    "PanTiltCalibrator",
    "PanTiltPose",
    "PanTiltRig",
    "ParallelAxesWarning",
    "PlaneFamilyFit",
    "SimRigParams",
    "TargetingReport",
    "TooFewFrames",
    "TrialRecord",
    "axis_line_distance",
    "axis_rotation_matrix",
    "calibrate_axis",
    "calibrate_rig",
    "compute_metrics",
    "corner_rest_positions",
    "fit_circle_centers",
    "fit_plane_family",
    "forward_transform",
    "generate_axis_sweep",
    "ideal_baseline_pose",
    "ik_jacobian",
    "is_rigid_transform",
    "line_angle",
    "make_reference_rig",
    "make_skewed_rig",
    "point_line_distance",
    "project_pinhole",
    "recover_frame_angles",
    "rodrigues_rotation",
    "rotate_about_axis",
    "rotate_points_about_axis",
    "run_targeting_experiment",
    "solve_ik",
    "sweep_angles",
    "transform_point",
    "translation_matrix",
    "unit_vector",
    "vector_angle",
    "world_from_local",
]
