"""Pan-tilt forward kinematics and Jacobian-transpose inverse kinematics.

The platform model is two independent rotation axes in arbitrary position and
orientation. A point captured in the local camera frame after rotating maps to
the rest (world) frame by rotating about the tilt axis first, then the pan
axis — the tilt servo rides on the pan arm, so this order makes the world
rotation unique:

    world = PanRot(alpha) @ TiltRot(beta) @ local

with each factor a translate-rotate-translate-back product about its axis.

Aiming means rotating the end of the optical axis, ``local = (0, 0, sz)``,
onto a world target. The camera looks along local -z, so ``sz`` is negative
for targets in front. The solver iterates theta <- theta + k * J^T e with the
one-dimensional optimal step k, optimizing ``sz`` in a larger length unit
(meters by default) so its magnitude stays comparable to the angles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import (
    AxisModel,
    as_point,
    axis_rotation_matrix,
    line_angle,
    rodrigues_rotation,
    transform_point,
)

__all__ = [
    "PanTiltRig",
    "PanTiltPose",
    "IKConfig",
    "IKSolution",
    "ParallelAxesWarning",
    "forward_transform",
    "world_from_local",
    "ik_jacobian",
    "solve_ik",
]

# Below this angle between the axis directions, aiming is (near) degenerate.
_PARALLEL_AXES_TOL = 1e-3


class ParallelAxesWarning(UserWarning):
    """Pan and tilt directions are (nearly) parallel; aiming will be degenerate."""


@dataclass(frozen=True, eq=False)
class PanTiltRig:
    """Calibrated pan and tilt axes, in the rest-pose camera frame."""

    pan: AxisModel
    tilt: AxisModel

    def __post_init__(self):
        if line_angle(self.pan.direction, self.tilt.direction) <= _PARALLEL_AXES_TOL:
            warnings.warn(
                "pan and tilt axis directions are nearly parallel", ParallelAxesWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class PanTiltPose:
    """Servo pose: pan angle ``alpha`` and tilt angle ``beta``, radians."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("pose angles must be finite")


@dataclass(frozen=True)
class IKConfig:
    """Solver settings.

    tolerance         target-to-aim error below which the solve converged, mm
    max_iterations    cap on parameter updates
    sz_unit_scale     mm per internal sz unit (1000 = optimize sz in meters)
    angle_min/max     mechanical range; angles are clamped here after each step
    use_fd_jacobian   replace the analytic Jacobian with central differences
    """

    tolerance: float = 1.0
    max_iterations: int = 100
    sz_unit_scale: float = 1000.0
    angle_min: float = -math.pi / 2
    angle_max: float = math.pi / 2
    use_fd_jacobian: bool = False
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.sz_unit_scale <= 0:
            raise ValueError("sz_unit_scale must be positive")
        if self.angle_min >= self.angle_max:
            raise ValueError("angle_min must be below angle_max")


@dataclass(frozen=True)
class IKSolution:
    """Result of one inverse-kinematics solve.

    ``sz`` is reported in millimeters (signed: negative for targets in front).
    ``diagnostic`` is None on a clean converged solve, otherwise one of
    "stalled", "range_limited", "max_iterations".
    """

    pose: PanTiltPose
    sz: float
    iterations: int
    final_error: float
    converged: bool
    diagnostic: str | None = None


def forward_transform(rig: PanTiltRig, pose: PanTiltPose) -> np.ndarray:
    """Homogeneous local-to-world transform at the given pose (tilt, then pan)."""
    pan_m = axis_rotation_matrix(rig.pan, pose.alpha)
    tilt_m = axis_rotation_matrix(rig.tilt, pose.beta)
    return pan_m @ tilt_m


def world_from_local(rig: PanTiltRig, pose: PanTiltPose, p_local) -> np.ndarray:
    """Map a local-frame point to the world (rest) frame at the given pose."""
    return transform_point(forward_transform(rig, pose), p_local)


def _optical_point(rig: PanTiltRig, alpha: float, beta: float, sz: float):
    """World position of (0, 0, sz) plus the intermediate tilt-stage point."""
    tilted = transform_point(axis_rotation_matrix(rig.tilt, beta), (0.0, 0.0, sz))
    world = transform_point(axis_rotation_matrix(rig.pan, alpha), tilted)
    return world, tilted


def ik_jacobian(rig: PanTiltRig, theta, config: IKConfig | None = None) -> np.ndarray:
    """3x3 Jacobian of the world optical-axis point w.r.t. (alpha, beta, sz_scaled).

    ``theta`` is the internal parameter vector; the third entry is sz divided
    by ``config.sz_unit_scale``. Columns are computed analytically from the
    rotation generators (d/dtheta of a rotation about an axis is the cross
    product with the axis direction); set ``use_fd_jacobian`` to cross-check
    with central finite differences instead.
    """
    config = config or IKConfig()
    if config.use_fd_jacobian:
        return _fd_jacobian(rig, theta, config)

    alpha, beta, sz_scaled = (float(t) for t in theta)
    if not all(math.isfinite(t) for t in (alpha, beta, sz_scaled)):
        raise ValueError("theta must be finite")
    sz = sz_scaled * config.sz_unit_scale
    world, tilted = _optical_point(rig, alpha, beta, sz)

    r_pan = rodrigues_rotation(rig.pan.direction, alpha)[:3, :3]
    r_tilt = rodrigues_rotation(rig.tilt.direction, beta)[:3, :3]

    col_alpha = np.cross(rig.pan.direction, world - rig.pan.pivot)
    col_beta = r_pan @ np.cross(rig.tilt.direction, tilted - rig.tilt.pivot)
    col_sz = config.sz_unit_scale * (r_pan @ (r_tilt @ np.array([0.0, 0.0, 1.0])))
    return np.column_stack([col_alpha, col_beta, col_sz])


def _fd_jacobian(rig: PanTiltRig, theta, config: IKConfig) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    h = config.fd_step
    jac = np.zeros((3, 3))
    for c in range(3):
        lo, hi = theta.copy(), theta.copy()
        lo[c] -= h
        hi[c] += h
        p_hi, _ = _optical_point(rig, hi[0], hi[1], hi[2] * config.sz_unit_scale)
        p_lo, _ = _optical_point(rig, lo[0], lo[1], lo[2] * config.sz_unit_scale)
        jac[:, c] = (p_hi - p_lo) / (2.0 * h)
    return jac


def solve_ik(rig: PanTiltRig, target, config: IKConfig | None = None) -> IKSolution:
    """Aim the optical axis at ``target`` with the Jacobian-transpose iteration.

    Starts from alpha = beta = 0 and sz = -|target| (the rest pose already aims
    along the optical axis at the target's range). Each step moves theta by
    k * J^T e with  k = <e, J J^T e> / <J J^T e, J J^T e>,  then clamps the
    angles to the mechanical range. Stops as soon as the aim error drops below
    ``config.tolerance`` (mm).

    Non-converged solves return the best iterate seen, with ``diagnostic`` set:
    "stalled" when the step direction vanishes (kinematic singularity),
    "range_limited" when the answer sits pinned at an angle clamp,
    "max_iterations" otherwise.
    """
    config = config or IKConfig()
    target = as_point(target)
    dist = float(np.linalg.norm(target))
    if dist == 0.0:
        raise ValueError("target must have nonzero norm")

    scale = config.sz_unit_scale
    theta = np.array([0.0, 0.0, -dist / scale])
    best_theta, best_err, best_iter = theta.copy(), math.inf, 0
    stalled = False

    iterations = 0
    while True:
        world, _ = _optical_point(rig, theta[0], theta[1], theta[2] * scale)
        e = target - world
        err = float(np.linalg.norm(e))
        if err < best_err:
            best_theta, best_err, best_iter = theta.copy(), err, iterations
        if err < config.tolerance or iterations >= config.max_iterations:
            break
        jac = ik_jacobian(rig, theta, config)
        g = jac.T @ e
        u = jac @ g  # J J^T e
        den = float(np.dot(u, u))
        if den < 1e-30:
            stalled = True
            break
        k = float(np.dot(e, u)) / den
        theta = theta + k * g
        theta[0] = min(max(theta[0], config.angle_min), config.angle_max)
        theta[1] = min(max(theta[1], config.angle_min), config.angle_max)
        iterations += 1

    converged = best_err < config.tolerance
    at_bound = best_theta[0] in (config.angle_min, config.angle_max) or best_theta[1] in (
        config.angle_min,
        config.angle_max,
    )
    if stalled:
        diagnostic = "stalled"
        converged = False
    elif at_bound:
        diagnostic = "range_limited"
        converged = False
    elif not converged:
        diagnostic = "max_iterations"
    else:
        diagnostic = None

    return IKSolution(
        pose=PanTiltPose(float(best_theta[0]), float(best_theta[1])),
        sz=float(best_theta[2] * scale),
        iterations=best_iter,
        final_error=best_err,
        converged=converged,
        diagnostic=diagnostic,
    )
