"""Targeting experiment: aim at world points, measure residual error in mm and pixels.

A model under test (a calibrated rig, or the ideal-axes closed form) proposes
a pose for each target; the pose is applied to the TRUE rig, simulating what
the physical servos would do. The miss is measured two ways:

* mm error — the target minus the aim point, where the aim point is the point
  on the rotated optical axis at the range the model estimated for the target
  (the solved optical-axis length for the inverse-kinematics model, the
  target's distance from the origin for the baseline, which assumes the
  camera never translates). This is the model's predicted capture position,
  so range misestimates show up as depth error, as they would in a capture.
* pixel error — the target projected into the rotated camera, minus the
  principal point (depth misestimates vanish here under projection).

The ideal-axes baseline assumes pan about world Y and tilt about world X, both
through the origin, with the camera at the origin looking along -z; it is the
assumption whose violation by real hand-assembled platforms the calibrated
model corrects.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import as_point
from .kinematics import IKConfig, PanTiltPose, PanTiltRig, forward_transform, solve_ik
from .simulate import SimRigParams

__all__ = [
    "CameraIntrinsics",
    "DEFAULT_INTRINSICS",
    "BehindCamera",
    "EmptyBatch",
    "GimbalDegenerateWarning",
    "TrialRecord",
    "TargetingReport",
    "project_pinhole",
    "ideal_baseline_pose",
    "run_targeting_experiment",
    "compute_metrics",
]


class BehindCamera(Exception):
    """Point has non-negative z in the -z-forward camera frame."""


class EmptyBatch(Exception):
    """No successful trial to aggregate."""


class GimbalDegenerateWarning(UserWarning):
    """Target lies along the pan axis; azimuth is undefined and reported as 0."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


# Kinect-v2-like color camera: ~1060 px focal length, 1920x1080 centered
# principal point. Any values work; pixel metrics scale accordingly.
DEFAULT_INTRINSICS = CameraIntrinsics(fx=1060.0, fy=1060.0, cx=960.0, cy=540.0)


def project_pinhole(k: CameraIntrinsics, p_cam) -> tuple[float, float]:
    """Project a camera-frame point to pixels.

    The camera looks along -z, so valid points have z < 0. The convention is
    (u, v) = (cx + fx*x/z, cy + fy*y/z): a point at +x lands left of center,
    matching the inverted image of a physical pinhole.
    """
    x, y, z = as_point(p_cam)
    if z >= 0:
        raise BehindCamera(f"point depth z={z:.6g} is not in front of the camera (z < 0)")
    return (k.cx + k.fx * x / z, k.cy + k.fy * y / z)


def ideal_baseline_pose(target) -> PanTiltPose:
    """Closed-form pan/tilt for an idealized platform.

    Assumes pan about world Y through the origin, tilt about world X through
    the origin, camera at the origin looking along -z, composed tilt-first:
    the optical direction at (alpha, beta) is
    (-sin(alpha)cos(beta), sin(beta), -cos(alpha)cos(beta)).
    """
    t = as_point(target)
    dist = float(np.linalg.norm(t))
    if dist == 0.0:
        raise ValueError("target must have nonzero norm")
    beta = math.asin(min(max(t[1] / dist, -1.0), 1.0))
    if math.hypot(t[0], t[2]) < 1e-12 * dist:
        warnings.warn(
            "target lies on the pan axis; returning pan angle 0", GimbalDegenerateWarning,
            stacklevel=2,
        )
        return PanTiltPose(0.0, beta)
    return PanTiltPose(math.atan2(-t[0], -t[2]), beta)


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """One aiming trial. Error fields are None when the stage that produces
    them failed (see ``diagnostic``)."""

    target: np.ndarray
    pose: PanTiltPose | None
    aim_point: np.ndarray | None
    error_mm: np.ndarray | None  # (3,) world-frame miss, mm
    error_px: np.ndarray | None  # (2,) image offset from the principal point
    converged: bool
    iterations: int
    diagnostic: str | None = None


@dataclass(frozen=True, eq=False)
class TargetingReport:
    """Per-trial records plus the aggregate metrics recomputable from them."""

    records: list[TrialRecord]
    rmse_mm: float
    rmse_px: float
    mae_x_mm: float
    mae_y_mm: float
    mae_z_mm: float
    mae_x_px: float
    mae_y_px: float
    n_trials: int
    n_failed: int
    n_converged: int
    mean_iterations: float


def compute_metrics(records: list[TrialRecord]) -> dict[str, float]:
    """Aggregate a batch: RMSE of error-vector L2 norms, MAE per direction.

    mm metrics aggregate records with a measured mm error; pixel metrics those
    with a measured pixel error (NaN when none project). Raises EmptyBatch if
    no record has a measured mm error.
    """
    mm = np.array([r.error_mm for r in records if r.error_mm is not None], dtype=float)
    px = np.array([r.error_px for r in records if r.error_px is not None], dtype=float)
    if mm.size == 0:
        raise EmptyBatch("no trial produced a measurable error")
    out = {
        "rmse_mm": math.sqrt(float(np.mean(np.sum(mm**2, axis=1)))),
        "mae_x_mm": float(np.mean(np.abs(mm[:, 0]))),
        "mae_y_mm": float(np.mean(np.abs(mm[:, 1]))),
        "mae_z_mm": float(np.mean(np.abs(mm[:, 2]))),
    }
    if px.size:
        out["rmse_px"] = math.sqrt(float(np.mean(np.sum(px**2, axis=1))))
        out["mae_x_px"] = float(np.mean(np.abs(px[:, 0])))
        out["mae_y_px"] = float(np.mean(np.abs(px[:, 1])))
    else:
        out["rmse_px"] = out["mae_x_px"] = out["mae_y_px"] = math.nan
    return out


def _true_rig(true_rig: SimRigParams | PanTiltRig) -> PanTiltRig:
    return true_rig.rig() if isinstance(true_rig, SimRigParams) else true_rig


def run_targeting_experiment(
    true_rig: SimRigParams | PanTiltRig,
    model: PanTiltRig | None,
    targets,
    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS,
    ik_config: IKConfig | None = None,
) -> TargetingReport:
    """Aim at every target with ``model`` and measure the miss on the true rig.

    ``model`` is a calibrated rig solved per target with inverse kinematics,
    or None for the ideal-axes closed-form baseline. Per-trial failures are
    recorded, not raised; records stay in input order.
    """
    truth = _true_rig(true_rig)
    ik_config = ik_config or IKConfig()
    records: list[TrialRecord] = []

    for target in np.atleast_2d(np.asarray(targets, dtype=float)):
        target = as_point(target)
        diagnostic = None
        try:
            if model is None:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", GimbalDegenerateWarning)
                    pose = ideal_baseline_pose(target)
                diagnostic = "gimbal_degenerate" if caught else None
                sz = -float(np.linalg.norm(target))
                converged, iterations = True, 0
            else:
                sol = solve_ik(model, target, ik_config)
                pose, sz = sol.pose, sol.sz
                converged, iterations = sol.converged, sol.iterations
                diagnostic = sol.diagnostic
        except ValueError as exc:
            records.append(TrialRecord(target, None, None, None, None, False, 0, str(exc)))
            continue

        m = forward_transform(truth, pose)
        origin = m[:3, 3]
        aim = m[:3, :3] @ np.array([0.0, 0.0, sz]) + origin
        error_mm = target - aim

        error_px = None
        p_cam = m[:3, :3].T @ (target - origin)
        try:
            u, v = project_pinhole(intrinsics, p_cam)
            error_px = np.array([u - intrinsics.cx, v - intrinsics.cy])
        except BehindCamera:
            diagnostic = diagnostic or "behind_camera"

        records.append(
            TrialRecord(target, pose, aim, error_mm, error_px, converged, iterations, diagnostic)
        )

    metrics = compute_metrics(records)
    measured = [r for r in records if r.error_mm is not None]
    return TargetingReport(
        records=records,
        rmse_mm=metrics["rmse_mm"],
        rmse_px=metrics["rmse_px"],
        mae_x_mm=metrics["mae_x_mm"],
        mae_y_mm=metrics["mae_y_mm"],
        mae_z_mm=metrics["mae_z_mm"],
        mae_x_px=metrics["mae_x_px"],
        mae_y_px=metrics["mae_y_px"],
        n_trials=len(records),
        n_failed=len(records) - len(measured),
        n_converged=sum(r.converged for r in records),
        mean_iterations=float(np.mean([r.iterations for r in measured])) if measured else math.nan,
    )
