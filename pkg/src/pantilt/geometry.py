"""3D geometry primitives: unit vectors, homogeneous transforms, off-origin axis rotations.

Lengths are millimeters, angles radians throughout. Rotations are right-handed
about the axis direction (counterclockwise when viewed from the tip of the
direction vector looking back at the origin of the axis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AxisModel",
    "as_point",
    "unit_vector",
    "rodrigues_rotation",
    "translation_matrix",
    "axis_rotation_matrix",
    "rotate_about_axis",
    "rotate_points_about_axis",
    "transform_point",
    "point_line_distance",
    "axis_line_distance",
    "vector_angle",
    "line_angle",
    "is_rigid_transform",
]

# Inputs shorter than this are rejected as degenerate (typically a failed fit upstream).
_ZERO_NORM_TOL = 1e-9


def as_point(p) -> np.ndarray:
    """Coerce to a finite (3,) float array."""
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("vector has non-finite components")
    return p


def unit_vector(v) -> np.ndarray:
    """Normalize ``v`` to unit length.

    Vectors already unit to within 1e-12 are returned unchanged so that values
    read back from files keep their exact bits. Near-zero vectors are rejected.
    """
    v = as_point(v)
    n = float(np.linalg.norm(v))
    if n < _ZERO_NORM_TOL:
        raise ValueError("cannot normalize a near-zero vector")
    if abs(n - 1.0) <= 1e-12:
        return v
    return v / n


@dataclass(frozen=True, eq=False)
class AxisModel:
    """A rotation axis in 3D: unit direction plus a pivot point on the axis line."""

    direction: np.ndarray
    pivot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "direction", unit_vector(self.direction))
        object.__setattr__(self, "pivot", as_point(self.pivot))

    def flipped(self) -> "AxisModel":
        """Same axis line with the direction reversed."""
        return AxisModel(-self.direction, self.pivot)


def rodrigues_rotation(axis_dir, theta: float) -> np.ndarray:
    """Homogeneous 4x4 rotation by ``theta`` about a direction through the origin."""
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    nx, ny, nz = unit_vector(axis_dir)
    c = math.cos(theta)
    s = math.sin(theta)
    t = 1.0 - c
    m = np.eye(4)
    m[:3, :3] = [
        [c + nx * nx * t, nx * ny * t - nz * s, nx * nz * t + ny * s],
        [ny * nx * t + nz * s, c + ny * ny * t, ny * nz * t - nx * s],
        [nz * nx * t - ny * s, nz * ny * t + nx * s, c + nz * nz * t],
    ]
    return m


def translation_matrix(p) -> np.ndarray:
    """Homogeneous 4x4 translation by ``p``."""
    m = np.eye(4)
    m[:3, 3] = as_point(p)
    return m


def axis_rotation_matrix(axis: AxisModel, theta: float) -> np.ndarray:
    """Rotation about an off-origin axis: move the pivot to the origin, rotate, move back."""
    t = translation_matrix(axis.pivot)
    t_inv = translation_matrix(-axis.pivot)
    return t @ rodrigues_rotation(axis.direction, theta) @ t_inv


def transform_point(m: np.ndarray, p) -> np.ndarray:
    """Apply a homogeneous 4x4 transform to a 3D point."""
    p = as_point(p)
    return m[:3, :3] @ p + m[:3, 3]


def rotate_about_axis(point, axis: AxisModel, theta: float) -> np.ndarray:
    """Rotate a single point about an arbitrary axis line."""
    return transform_point(axis_rotation_matrix(axis, theta), point)


def rotate_points_about_axis(points: np.ndarray, axis: AxisModel, theta: float) -> np.ndarray:
    """Rotate an (..., 3) array of points about an axis line in one shot."""
    points = np.asarray(points, dtype=float)
    r = rodrigues_rotation(axis.direction, theta)[:3, :3]
    return (points - axis.pivot) @ r.T + axis.pivot


def point_line_distance(point, axis: AxisModel) -> float:
    """Perpendicular distance from a point to the axis line, in mm."""
    delta = as_point(point) - axis.pivot
    return float(np.linalg.norm(np.cross(delta, axis.direction)))


def axis_line_distance(a: AxisModel, b: AxisModel) -> float:
    """Symmetric distance between two axis lines: zero iff the pivots lie on each
    other's line. Meaningful when the directions (nearly) agree."""
    return max(point_line_distance(a.pivot, b), point_line_distance(b.pivot, a))


def vector_angle(u, v) -> float:
    """Angle between two vectors in [0, pi], robust near 0 and pi."""
    u = as_point(u)
    v = as_point(v)
    return float(math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v))))


def line_angle(u, v) -> float:
    """Angle between two undirected lines in [0, pi/2] (sign of either vector ignored)."""
    a = vector_angle(u, v)
    return min(a, math.pi - a)


def is_rigid_transform(m: np.ndarray, tol: float = 1e-9) -> bool:
    """True when the bottom row is exactly (0, 0, 0, 1) and the 3x3 block is a
    proper rotation (orthonormal, determinant +1) to within ``tol``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        return False
    if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
        return False
    r = m[:3, :3]
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol
