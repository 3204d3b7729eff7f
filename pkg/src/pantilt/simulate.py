"""Synthetic ground-truth rigs and sweep generators.

Stands in for a physical camera-on-servos setup: given exact axis models and a
board placement, it produces the corner observations a calibration sweep would
capture. Rotating the board by +theta about an axis is the geometric dual of
rotating the camera by -theta, so the generated trajectories trace the same
circles about the same axis either way.

Noise is isotropic Gaussian per coordinate, drawn from numpy's PCG64 generator
seeded per frame with (seed, frame_index); identical parameters therefore give
bit-identical observations regardless of evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AxisModel, as_point, rotate_points_about_axis, unit_vector
from .kinematics import PanTiltRig
from .observations import BoardSpec, CornerObservations

__all__ = [
    "NoiseSpec",
    "SimRigParams",
    "corner_rest_positions",
    "generate_axis_sweep",
    "make_reference_rig",
    "make_skewed_rig",
    "sweep_angles",
    "RNG_DESCRIPTION",
    "REFERENCE_PAN_FRAMES",
    "REFERENCE_TILT_FRAMES",
    "REFERENCE_SWEEP_RANGE",
]

RNG_DESCRIPTION = "numpy-pcg64(seed,frame)"

# Reference sweep: frame counts per axis, swept uniformly end-to-end over the
# servo range (radians).
REFERENCE_PAN_FRAMES = 28
REFERENCE_TILT_FRAMES = 11
REFERENCE_SWEEP_RANGE = (-math.pi / 2, math.pi / 2)


@dataclass(frozen=True)
class NoiseSpec:
    """Isotropic Gaussian corner noise: std-dev ``sigma`` mm per coordinate."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True, eq=False)
class SimRigParams:
    """Ground-truth rig: both axes plus the rest-pose board placement.

    ``board_origin`` is the top-left corner (i = j = 0) at rest;
    ``board_right`` / ``board_down`` are the unit directions of increasing
    column / row index and must be perpendicular.
    """

    pan_axis: AxisModel
    tilt_axis: AxisModel
    board: BoardSpec
    board_origin: np.ndarray
    board_right: np.ndarray
    board_down: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "board_origin", as_point(self.board_origin))
        object.__setattr__(self, "board_right", unit_vector(self.board_right))
        object.__setattr__(self, "board_down", unit_vector(self.board_down))
        if abs(float(np.dot(self.board_right, self.board_down))) > 1e-9:
            raise ValueError("board_right and board_down must be perpendicular")

    def rig(self) -> PanTiltRig:
        """The kinematic model of this ground-truth rig."""
        return PanTiltRig(self.pan_axis, self.tilt_axis)


def corner_rest_positions(params: SimRigParams) -> np.ndarray:
    """Rest-pose corner grid, shape (rows, cols, 3)."""
    b = params.board
    ii = np.arange(b.rows)[:, None, None]
    jj = np.arange(b.cols)[None, :, None]
    return (
        params.board_origin
        + ii * b.pitch_h * params.board_down
        + jj * b.pitch_w * params.board_right
    )


def sweep_angles(n_frames: int, sweep_range: tuple[float, float] = REFERENCE_SWEEP_RANGE) -> np.ndarray:
    """Uniform, increasing angle schedule over ``sweep_range`` (radians)."""
    if n_frames < 3:
        raise ValueError("a sweep needs at least 3 frames")
    return np.linspace(sweep_range[0], sweep_range[1], n_frames)


def generate_axis_sweep(
    params: SimRigParams,
    which: str,
    angles,
    noise: NoiseSpec | None = None,
) -> CornerObservations:
    """Observations of the board rotated about one axis at the given angles.

    ``which`` selects "pan" or "tilt". Frame k holds the rest corners rotated
    by angles[k] about the chosen axis, plus Gaussian noise per ``noise``.
    """
    if which not in ("pan", "tilt"):
        raise ValueError(f'axis must be "pan" or "tilt", got {which!r}')
    angles = np.asarray(angles, dtype=float)
    if angles.ndim != 1 or len(angles) < 3:
        raise ValueError("need at least 3 sweep angles")
    noise = noise or NoiseSpec()

    axis = params.pan_axis if which == "pan" else params.tilt_axis
    rest = corner_rest_positions(params)
    frames = np.empty((len(angles),) + rest.shape)
    for k, theta in enumerate(angles):
        frame = rotate_points_about_axis(rest, axis, float(theta))
        if noise.sigma > 0:
            rng = np.random.default_rng((noise.seed, k))
            frame = frame + noise.sigma * rng.standard_normal(rest.shape)
        frames[k] = frame
    return CornerObservations(params.board, frames)


# Measured axis parameters of a real hand-assembled pan-tilt unit, used as the
# built-in reference fixture. Directions are near-unit as measured and are
# normalized on construction.
_REFERENCE_PAN_DIRECTION = (0.011783038, 0.982956803, -0.183458670)
_REFERENCE_PAN_PIVOT = (-82.414993286, -458.764739990, 108.336227417)
_REFERENCE_TILT_DIRECTION = (0.998429941, -0.007633507, -0.055492186)
_REFERENCE_TILT_PIVOT = (-412.069976807, 153.644714355, 22.413515091)

# Rest-pose board placement for the reference fixture: a 7x10-corner grid at
# 100 mm pitch, centered about 2 m in front of the camera (which looks along
# -z), board x along world +x and board rows descending world y.
_REFERENCE_BOARD = BoardSpec(rows=7, cols=10, pitch_h=100.0, pitch_w=100.0)
_REFERENCE_BOARD_ORIGIN = (-450.0, 300.0, -2000.0)
_REFERENCE_BOARD_RIGHT = (1.0, 0.0, 0.0)
_REFERENCE_BOARD_DOWN = (0.0, -1.0, 0.0)


def make_reference_rig() -> SimRigParams:
    """Built-in reference rig: measured skewed, off-origin axes and the standard
    board placement. Useful as a realistic default fixture for simulation and
    tests."""
    return SimRigParams(
        pan_axis=AxisModel(_REFERENCE_PAN_DIRECTION, _REFERENCE_PAN_PIVOT),
        tilt_axis=AxisModel(_REFERENCE_TILT_DIRECTION, _REFERENCE_TILT_PIVOT),
        board=_REFERENCE_BOARD,
        board_origin=_REFERENCE_BOARD_ORIGIN,
        board_right=_REFERENCE_BOARD_RIGHT,
        board_down=_REFERENCE_BOARD_DOWN,
    )


def make_skewed_rig(
    seed: int,
    skew_deg: tuple[float, float] = (5.0, 15.0),
    pivot_offset: tuple[float, float] = (100.0, 500.0),
) -> SimRigParams:
    """Random misassembled rig of the bracket-mounted kind the reference unit is.

    Misassembly is sampled the way stacked-servo brackets actually err, which
    is also the structure of the reference fixture's measured axes:

    * each axis direction tips 5-15 degrees (``skew_deg``) away from its ideal
      world axis, predominantly toward/away from the scene (a mounting pitch
      error), with a small sideways wobble;
    * the perpendicular lever arm from the camera to each axis lies mostly in
      the image plane: the pan axis passes beside the camera, the tilt axis
      above or below it (80-200 mm), so rotation translates the camera partly
      along the viewing direction;
    * the rest of the pivot's distance from the origin, up to a total drawn
      from ``pivot_offset`` mm, lies along the axis itself.

    The board placement matches the reference fixture.
    """
    rng = np.random.default_rng(seed)

    def skewed(base: np.ndarray) -> np.ndarray:
        angle = math.radians(rng.uniform(*skew_deg))
        tip = np.array([0.0, 0.0, rng.choice([-1.0, 1.0])])
        side = unit_vector(np.cross(base, tip))
        tip_dir = unit_vector(tip + 0.2 * rng.uniform(-1.0, 1.0) * side)
        return math.cos(angle) * base + math.sin(angle) * tip_dir

    def pivot(direction: np.ndarray, lever_main: np.ndarray) -> np.ndarray:
        lever = rng.uniform(80.0, 200.0)
        phi = math.radians(rng.uniform(-40.0, 40.0))
        in_plane = math.cos(phi) * rng.choice([-1.0, 1.0]) * lever_main
        in_plane = in_plane + math.sin(phi) * np.array([0.0, 0.0, 1.0])
        perp = lever * in_plane
        perp = perp - direction * float(np.dot(perp, direction))
        total = rng.uniform(max(pivot_offset[0], float(np.linalg.norm(perp)) + 1.0), pivot_offset[1])
        gauge = math.sqrt(max(total**2 - float(np.dot(perp, perp)), 0.0))
        return perp + rng.choice([-1.0, 1.0]) * gauge * direction

    pan_dir = skewed(np.array([0.0, 1.0, 0.0]))
    tilt_dir = skewed(np.array([1.0, 0.0, 0.0]))
    return SimRigParams(
        pan_axis=AxisModel(pan_dir, pivot(pan_dir, np.array([1.0, 0.0, 0.0]))),
        tilt_axis=AxisModel(tilt_dir, pivot(tilt_dir, np.array([0.0, 1.0, 0.0]))),
        board=_REFERENCE_BOARD,
        board_origin=_REFERENCE_BOARD_ORIGIN,
        board_right=_REFERENCE_BOARD_RIGHT,
        board_down=_REFERENCE_BOARD_DOWN,
    )
