"""Scikit-learn-style estimator facade over the calibration and aiming API.

``AxisCalibrator`` and ``PanTiltCalibrator`` are fit-only estimators that
recover axis models from corner-trajectory data; ``PanTiltAimer`` adds
``predict`` to turn world targets into servo poses, so the whole pipeline
composes with the usual get_params/set_params/clone machinery.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .calibration import calibrate_axis
from .kinematics import IKConfig, IKSolution, PanTiltRig, solve_ik
from .observations import BoardSpec, CornerObservations

__all__ = ["AxisCalibrator", "PanTiltCalibrator", "PanTiltAimer", "as_corner_observations"]


def as_corner_observations(X) -> CornerObservations:
    """Validate estimator input: a CornerObservations, or a (frames, rows,
    cols, 3) array. Board pitches are irrelevant to axis recovery, so array
    input gets a unit-pitch board."""
    if isinstance(X, CornerObservations):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 4 or arr.shape[-1] != 3:
        raise ValueError(
            f"expected CornerObservations or an (n_frames, rows, cols, 3) array, got shape {arr.shape}"
        )
    board = BoardSpec(rows=arr.shape[1], cols=arr.shape[2], pitch_h=1.0, pitch_w=1.0)
    return CornerObservations(board, arr)


def _check_targets(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"targets must be an (n, 3) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("targets must be finite")
    return arr


class AxisCalibrator(BaseEstimator):
    """Recover one rotation axis from checkerboard-corner trajectories.

    Parameters mirror the circle-fit options: ``polish`` toggles the
    Gauss-Newton refinement of the algebraic circle fit.

    Attributes (after ``fit``): ``axis_``, ``direction_``, ``pivot_``,
    ``report_`` (full CalibrationReport), ``frame_angles_``, ``rms_plane_``,
    ``rms_circle_``.
    """

    def __init__(self, polish: bool = True, max_polish_iterations: int = 20,
                 polish_tolerance: float = 1e-9):
        self.polish = polish
        self.max_polish_iterations = max_polish_iterations
        self.polish_tolerance = polish_tolerance

    def fit(self, X, y=None):
        obs = as_corner_observations(X)
        report = calibrate_axis(
            obs, polish=self.polish,
            max_polish_iterations=self.max_polish_iterations,
            polish_tolerance=self.polish_tolerance,
        )
        self.report_ = report
        self.axis_ = report.axis
        self.direction_ = report.axis.direction
        self.pivot_ = report.axis.pivot
        self.frame_angles_ = report.frame_angles
        self.rms_plane_ = report.plane_fit.rms_residual
        self.rms_circle_ = report.circle_fit.rms_residual
        return self

    def score(self, X=None, y=None) -> float:
        """Negative circle-fit RMS residual (higher is better)."""
        if not hasattr(self, "rms_circle_"):
            raise NotFittedError("AxisCalibrator is not fitted")
        return -self.rms_circle_


class PanTiltCalibrator(BaseEstimator):
    """Calibrate both axes of a pan-tilt rig.

    ``fit`` takes X = (pan_observations, tilt_observations); each element is a
    CornerObservations or a corner array. Attributes: ``rig_``,
    ``pan_report_``, ``tilt_report_``.
    """

    def __init__(self, polish: bool = True):
        self.polish = polish

    def fit(self, X, y=None):
        try:
            pan_obs, tilt_obs = X
        except (TypeError, ValueError) as exc:
            raise ValueError("X must be a (pan_observations, tilt_observations) pair") from exc
        self.pan_report_ = calibrate_axis(as_corner_observations(pan_obs), polish=self.polish)
        self.tilt_report_ = calibrate_axis(as_corner_observations(tilt_obs), polish=self.polish)
        self.rig_ = PanTiltRig(self.pan_report_.axis, self.tilt_report_.axis)
        return self


class PanTiltAimer(BaseEstimator):
    """Aim the optical axis at world targets via inverse kinematics.

    Either pass a calibrated ``rig`` up front, or fit from a
    (pan_observations, tilt_observations) pair. ``predict`` maps an (n, 3)
    array of targets to an (n, 3) array of (pan angle, tilt angle, optical
    axis length mm); ``solve`` returns the full IKSolution for one target.
    """

    def __init__(self, rig: PanTiltRig | None = None, tolerance: float = 1.0,
                 max_iterations: int = 100, sz_unit_scale: float = 1000.0,
                 polish: bool = True):
        self.rig = rig
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.sz_unit_scale = sz_unit_scale
        self.polish = polish

    def fit(self, X=None, y=None):
        if X is None:
            if self.rig is None:
                raise ValueError("either construct with a rig or fit on observations")
            self.rig_ = self.rig
        elif isinstance(X, PanTiltRig):
            self.rig_ = X
        else:
            self.rig_ = PanTiltCalibrator(polish=self.polish).fit(X).rig_
        return self

    def _config(self) -> IKConfig:
        return IKConfig(
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
            sz_unit_scale=self.sz_unit_scale,
        )

    def solve(self, target) -> IKSolution:
        """Full diagnostics for a single target."""
        if not hasattr(self, "rig_"):
            raise NotFittedError("PanTiltAimer is not fitted")
        return solve_ik(self.rig_, target, self._config())

    def predict(self, X) -> np.ndarray:
        """Poses for an (n, 3) target array: columns (alpha, beta, sz_mm)."""
        targets = _check_targets(X)
        out = np.empty((len(targets), 3))
        for idx, target in enumerate(targets):
            sol = self.solve(target)
            out[idx] = (sol.pose.alpha, sol.pose.beta, sol.sz)
        return out
