"""Rotation-axis calibration from checkerboard-corner trajectories.

When a rigid board rotates about a fixed axis, every corner traces a circle on
a plane perpendicular to the axis, and the planes of neighboring corners are
offset along the axis by fixed per-row / per-column steps. Calibration is a
two-step least-squares fit:

1. ``fit_plane_family`` recovers the shared plane normal (= axis direction)
   and the per-index plane offsets by minimizing the stacked plane residuals
   under a unit-normal constraint (reduced 3x3 symmetric eigenproblem).
2. ``fit_circle_centers`` recovers the circle centers, constrained to lie on
   one line along the normal, via an algebraic (Kasa-style) linear solve plus
   an optional Gauss-Newton polish of the true squared-radius residual.

``calibrate_axis`` chains both, orients the direction so that frame order
corresponds to positive rotation, and reports per-corner fit quality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AxisModel, unit_vector
from .kinematics import PanTiltRig
from .observations import CornerObservations

__all__ = [
    "CalibrationError",
    "TooFewFrames",
    "DegenerateRotation",
    "DegenerateTrajectory",
    "PlaneFamilyFit",
    "CircleFit",
    "CalibrationReport",
    "fit_plane_family",
    "fit_circle_centers",
    "recover_frame_angles",
    "calibrate_axis",
    "calibrate_rig",
]

# Eigenvalue-gap ratio below which the motion is considered too small to pin
# down the rotation plane normal. Well-excited noiseless sweeps sit above 1e3.
_EIGENGAP_RATIO = 10.0

# Two corner positions closer than this (mm) count as the same position.
_DEDUP_TOL = 1e-9

# Corners closer to the axis than this (mm) carry no usable angle information.
_MIN_ANGLE_RADIUS = 1e-6


class CalibrationError(Exception):
    """Base class for calibration failures."""


class TooFewFrames(CalibrationError):
    """Fewer than three frames: the plane family is underdetermined."""


class DegenerateRotation(CalibrationError):
    """The frames show (almost) no rotation, so no axis can be recovered."""


class DegenerateTrajectory(CalibrationError):
    """Too few distinct positions per corner to fit circles."""


@dataclass(frozen=True, eq=False)
class PlaneFamilyFit:
    """Family of parallel rotation planes, one per corner.

    Corner (i, j) lies on the plane  normal . v + offset + i*row_step + j*col_step = 0.
    ``row_step`` / ``col_step`` are signed projections of the board pitches onto
    the normal and may be negative. ``rms_residual`` is in mm.
    """

    normal: np.ndarray
    offset: float
    row_step: float
    col_step: float
    rms_residual: float

    def __post_init__(self):
        object.__setattr__(self, "normal", unit_vector(self.normal))

    def flipped(self) -> "PlaneFamilyFit":
        """Same plane family described with the opposite normal."""
        return PlaneFamilyFit(
            -self.normal, -self.offset, -self.row_step, -self.col_step, self.rms_residual
        )

    def corner_offset(self, i, j):
        """Plane constant for corner (i, j): offset + i*row_step + j*col_step."""
        return self.offset + np.asarray(i) * self.row_step + np.asarray(j) * self.col_step


@dataclass(frozen=True, eq=False)
class CircleFit:
    """Per-corner rotation circles sharing one center line along the plane normal.

    ``center`` is the circle center of corner (0, 0), placed on that corner's
    fitted plane; the center of corner (i, j) is
    ``center - normal * (i*row_step + j*col_step)``. ``radii`` is an (m, n)
    grid in mm with NaN for corners whose trajectories were too degenerate to
    fit (mirrored in ``valid``). ``rms_residual`` is the RMS geometric
    point-to-circle distance in mm over all valid samples.
    """

    center: np.ndarray
    radii: np.ndarray
    valid: np.ndarray
    rms_residual: float


@dataclass(frozen=True, eq=False)
class CalibrationReport:
    """Everything recovered for one rotation axis."""

    axis: AxisModel
    plane_fit: PlaneFamilyFit
    circle_fit: CircleFit
    per_corner_rms: np.ndarray
    frame_angles: np.ndarray


def _stack_valid(obs: CornerObservations) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten valid samples to (points (N,3), row index (N,), col index (N,))."""
    _, ii, jj = np.nonzero(obs.valid)
    pts = obs.points[obs.valid]
    return pts, ii.astype(float), jj.astype(float)


def _max_corner_spread(obs: CornerObservations) -> float:
    """Largest distance any corner moves from its first valid position."""
    spread = 0.0
    for i in range(obs.board.rows):
        for j in range(obs.board.cols):
            track, _ = obs.corner_track(i, j)
            if len(track) > 1:
                d = np.linalg.norm(track - track[0], axis=1).max()
                spread = max(spread, float(d))
    return spread


def fit_plane_family(obs: CornerObservations) -> PlaneFamilyFit:
    """Fit the shared-normal plane family to all valid corner samples.

    Minimizes the sum of squared plane residuals over (normal, offset,
    row_step, col_step) subject to ||normal|| = 1. For a fixed normal the
    linear part is an ordinary least-squares solve; eliminating it leaves a
    3x3 symmetric problem whose smallest-eigenvalue eigenvector is the optimal
    normal.

    Raises TooFewFrames for fewer than 3 frames and DegenerateRotation when
    the frames do not move enough to determine the normal.
    """
    if obs.n_frames < 3:
        raise TooFewFrames(f"need at least 3 frames, got {obs.n_frames}")
    if _max_corner_spread(obs) < _DEDUP_TOL:
        raise DegenerateRotation("corners do not move between frames")

    pts, ii, jj = _stack_valid(obs)
    a_lin = np.column_stack([np.ones(len(pts)), ii, jj])

    # Least-squares residual of the coordinates against the linear columns;
    # the reduced quadratic form for the normal is the residual Gram matrix.
    coef, *_ = np.linalg.lstsq(a_lin, pts, rcond=None)
    resid = pts - a_lin @ coef
    reduced = resid.T @ resid
    reduced = 0.5 * (reduced + reduced.T)

    evals, evecs = np.linalg.eigh(reduced)
    lam1 = max(float(evals[0]), 0.0)
    lam2 = max(float(evals[1]), 0.0)
    lam3 = max(float(evals[2]), 0.0)
    gap = lam2 / max(lam1, 1e-15 * lam3, 1e-300)
    if gap < _EIGENGAP_RATIO:
        raise DegenerateRotation(
            f"rotation span too small: eigenvalue gap ratio {gap:.3g} < {_EIGENGAP_RATIO}"
        )

    normal = evecs[:, 0]
    lin, *_ = np.linalg.lstsq(a_lin, -(pts @ normal), rcond=None)
    sse = float(np.sum((pts @ normal + a_lin @ lin) ** 2))
    rms = math.sqrt(sse / len(pts))
    return PlaneFamilyFit(normal, float(lin[0]), float(lin[1]), float(lin[2]), rms)


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane perpendicular to ``normal``."""
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(normal)))] = 1.0
    e1 = unit_vector(seed - normal * float(np.dot(seed, normal)))
    e2 = np.cross(normal, e1)
    return e1, e2


def _corner_validity(obs: CornerObservations) -> np.ndarray:
    """Corners with at least 3 distinct valid positions (greedy dedup)."""
    m, n = obs.board.rows, obs.board.cols
    usable = np.zeros((m, n), dtype=bool)
    for i in range(m):
        for j in range(n):
            track, _ = obs.corner_track(i, j)
            kept: list[np.ndarray] = []
            for p in track:
                if all(np.linalg.norm(p - q) > _DEDUP_TOL for q in kept):
                    kept.append(p)
                if len(kept) >= 3:
                    usable[i, j] = True
                    break
    return usable


def fit_circle_centers(
    obs: CornerObservations,
    plane: PlaneFamilyFit,
    polish: bool = True,
    max_polish_iterations: int = 20,
    polish_tolerance: float = 1e-9,
) -> CircleFit:
    """Fit the per-corner circle centers given the fitted plane family.

    Centers are constrained to one line along the plane normal; the remaining
    unknowns are the in-plane position of the corner-(0,0) center and one
    squared-radius constant per corner. Expanding the sphere equation makes
    that a linear least-squares problem (Kasa linearization). When ``polish``
    is on, the solution is refined by Gauss-Newton on the true squared-radius
    residual sum, moving the center within its plane.

    Corners with fewer than 3 distinct positions are flagged invalid; if more
    than half of the corners are invalid the fit fails with
    DegenerateTrajectory.
    """
    usable = _corner_validity(obs)
    m, n = usable.shape
    if usable.sum() < 0.5 * usable.size:
        raise DegenerateTrajectory(
            f"only {int(usable.sum())}/{usable.size} corners have enough distinct positions"
        )

    normal = plane.normal
    # Base point of the corner-(0,0) plane; the center search stays on this
    # plane because sliding along the normal is pure gauge for the transform.
    p0 = -plane.offset * normal
    e1, e2 = _plane_basis(normal)

    corner_ids = np.full((m, n), -1, dtype=int)
    corner_ids[usable] = np.arange(int(usable.sum()))
    n_corners = int(usable.sum())

    sample_mask = obs.valid & usable[None, :, :]
    _, s_i, s_j = np.nonzero(sample_mask)
    v = obs.points[sample_mask]
    cid = corner_ids[s_i, s_j]
    delta = plane.corner_offset(s_i, s_j) - plane.offset  # i*row_step + j*col_step

    # Linear stage: 2 v.(x e1 + y e2) - q_cid = |v|^2 + 2 delta (v.n) - 2 v.p0,
    # with the per-corner constants q profiled out by per-corner centering.
    rhs = np.einsum("ij,ij->i", v, v) + 2.0 * delta * (v @ normal) - 2.0 * (v @ p0)
    cols = np.column_stack([2.0 * (v @ e1), 2.0 * (v @ e2)])
    counts = np.bincount(cid, minlength=n_corners).astype(float)
    col_means = np.stack(
        [np.bincount(cid, weights=cols[:, c], minlength=n_corners) / counts for c in range(2)],
        axis=1,
    )
    rhs_means = np.bincount(cid, weights=rhs, minlength=n_corners) / counts
    xy, *_ = np.linalg.lstsq(cols - col_means[cid], rhs - rhs_means[cid], rcond=None)
    x, y = float(xy[0]), float(xy[1])

    delta_corner = np.bincount(cid, weights=delta, minlength=n_corners) / counts

    def centers_for(xc: float, yc: float) -> np.ndarray:
        base = p0 + xc * e1 + yc * e2
        return base[None, :] - np.outer(delta_corner, normal)

    def mean_sq_dist(xc: float, yc: float) -> np.ndarray:
        diff = v - centers_for(xc, yc)[cid]
        return np.bincount(cid, weights=np.einsum("ij,ij->i", diff, diff), minlength=n_corners) / counts

    if polish:
        radii_sq = mean_sq_dist(x, y)
        params = np.concatenate([[x, y], np.sqrt(np.maximum(radii_sq, 0.0))])
        for _ in range(max_polish_iterations):
            cx, cy = params[0], params[1]
            r = params[2:]
            diff = v - centers_for(cx, cy)[cid]
            f = np.einsum("ij,ij->i", diff, diff) - r[cid] ** 2
            jac = np.zeros((len(v), 2 + n_corners))
            jac[:, 0] = -2.0 * (diff @ e1)
            jac[:, 1] = -2.0 * (diff @ e2)
            jac[np.arange(len(v)), 2 + cid] = -2.0 * r[cid]
            step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
            params = params + step
            if np.max(np.abs(step)) < polish_tolerance:
                break
        x, y = float(params[0]), float(params[1])

    centers = centers_for(x, y)
    diff = v - centers[cid]
    out_of_plane = diff @ normal
    in_plane = diff - np.outer(out_of_plane, normal)
    rho = np.linalg.norm(in_plane, axis=1)

    # Final radii: RMS in-plane distance of each corner's samples to its center.
    radii_flat = np.sqrt(np.bincount(cid, weights=rho**2, minlength=n_corners) / counts)
    dist_sq = (rho - radii_flat[cid]) ** 2 + out_of_plane**2
    rms = math.sqrt(float(dist_sq.mean()))

    radii = np.full((m, n), np.nan)
    radii[usable] = radii_flat
    return CircleFit(p0 + x * e1 + y * e2, radii, usable, rms)


def recover_frame_angles(obs: CornerObservations, axis: AxisModel) -> np.ndarray:
    """Signed rotation angle of every frame relative to frame 0, in radians.

    Each corner votes with the signed angle between its frame-0 and frame-k
    positions measured in the plane perpendicular to the axis about its own
    circle center (the projection of its frame-0 position onto the axis line);
    votes are combined by a circular mean. Corners on the axis, or without a
    valid frame-0 sample, are excluded.
    """
    n = axis.direction
    refs = []  # (i, j, center, in-plane reference vector)
    for i in range(obs.board.rows):
        for j in range(obs.board.cols):
            if not obs.valid[0, i, j]:
                continue
            v0 = obs.points[0, i, j]
            center = axis.pivot + n * float(np.dot(v0 - axis.pivot, n))
            u0 = v0 - center
            u0 = u0 - n * float(np.dot(u0, n))
            if np.linalg.norm(u0) < _MIN_ANGLE_RADIUS:
                continue
            refs.append((i, j, center, u0))
    if not refs:
        raise DegenerateTrajectory("no corner is far enough from the axis to measure angles")

    angles = np.zeros(obs.n_frames)
    for k in range(obs.n_frames):
        sines, cosines = [], []
        for i, j, center, u0 in refs:
            if not obs.valid[k, i, j]:
                continue
            w = obs.points[k, i, j] - center
            w = w - n * float(np.dot(w, n))
            theta = math.atan2(float(np.dot(n, np.cross(u0, w))), float(np.dot(u0, w)))
            sines.append(math.sin(theta))
            cosines.append(math.cos(theta))
        if not sines:
            raise DegenerateTrajectory(f"frame {k} has no usable corner")
        angles[k] = math.atan2(np.mean(sines), np.mean(cosines))
    return angles


def calibrate_axis(
    obs: CornerObservations,
    polish: bool = True,
    max_polish_iterations: int = 20,
    polish_tolerance: float = 1e-9,
) -> CalibrationReport:
    """Recover one rotation axis: plane-family fit, then circle-center fit.

    The direction sign is chosen so the recovered frame angles increase on
    average with frame order (capture order = positive rotation).
    """
    plane = fit_plane_family(obs)
    circle = fit_circle_centers(
        obs, plane, polish=polish,
        max_polish_iterations=max_polish_iterations,
        polish_tolerance=polish_tolerance,
    )
    axis = AxisModel(plane.normal, circle.center)
    angles = recover_frame_angles(obs, axis)
    # Unwrap before averaging: a sweep spanning half a turn puts the last
    # frame right at the +/-pi boundary, where the wrapped sign is arbitrary.
    if obs.n_frames >= 2 and float(np.mean(np.diff(np.unwrap(angles)))) < 0.0:
        plane = plane.flipped()
        axis = axis.flipped()
        angles = -angles

    per_corner_rms = _per_corner_circle_rms(obs, plane, circle)
    return CalibrationReport(axis, plane, circle, per_corner_rms, angles)


def _per_corner_circle_rms(
    obs: CornerObservations, plane: PlaneFamilyFit, circle: CircleFit
) -> np.ndarray:
    """RMS point-to-circle distance per corner (in-plane radial and out-of-plane
    components combined); NaN for invalid corners."""
    n = plane.normal
    m, ncols = circle.valid.shape
    out = np.full((m, ncols), np.nan)
    for i in range(m):
        for j in range(ncols):
            if not circle.valid[i, j]:
                continue
            track, _ = obs.corner_track(i, j)
            center = circle.center - n * (i * plane.row_step + j * plane.col_step)
            diff = track - center
            h = diff @ n
            rho = np.linalg.norm(diff - np.outer(h, n), axis=1)
            out[i, j] = math.sqrt(float(np.mean((rho - circle.radii[i, j]) ** 2 + h**2)))
    return out


def calibrate_rig(
    pan_obs: CornerObservations, tilt_obs: CornerObservations, polish: bool = True
) -> PanTiltRig:
    """Calibrate both axes and assemble the rig model.

    Both observation sets must be expressed in the same (rest-pose camera)
    coordinate frame. Near-parallel axes are legal but trigger a warning,
    since they make aiming degenerate.
    """
    pan_report = calibrate_axis(pan_obs, polish=polish)
    tilt_report = calibrate_axis(tilt_obs, polish=polish)
    return PanTiltRig(pan_report.axis, tilt_report.axis)
