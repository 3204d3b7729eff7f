"""Checkerboard corner observations: the raw input to axis calibration.

A dataset is a stack of frames, each holding the 3D position of every interior
corner of a planar checkerboard, all expressed in the same coordinate frame
(the rest-pose camera frame). Corners are indexed (row i, col j) with i
increasing downward and j increasing rightward in board order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["BoardSpec", "CornerObservations"]


@dataclass(frozen=True)
class BoardSpec:
    """Interior-corner grid of a checkerboard: ``rows x cols`` corners spaced
    ``pitch_h`` (vertical) and ``pitch_w`` (horizontal) millimeters apart."""

    rows: int
    cols: int
    pitch_h: float
    pitch_w: float

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("board needs at least 2x2 corners")
        if self.pitch_h <= 0 or self.pitch_w <= 0:
            raise ValueError("corner pitches must be positive")


@dataclass(frozen=True, eq=False)
class CornerObservations:
    """Corner positions for ``n_frames`` frames.

    points: (n_frames, rows, cols, 3) float array, millimeters.
    valid:  (n_frames, rows, cols) bool mask; invalid entries are ignored by
            every fit (occluded or undetected corners).
    """

    board: BoardSpec
    points: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        expected = (pts.shape[0], self.board.rows, self.board.cols, 3)
        if pts.ndim != 4 or pts.shape != expected or pts.shape[0] < 1:
            raise ValueError(
                f"points must have shape (n_frames, {self.board.rows}, {self.board.cols}, 3), "
                f"got {pts.shape}"
            )
        if self.valid is None:
            mask = np.ones(pts.shape[:3], dtype=bool)
        else:
            mask = np.asarray(self.valid, dtype=bool)
            if mask.shape != pts.shape[:3]:
                raise ValueError(f"valid mask shape {mask.shape} does not match frames {pts.shape[:3]}")
        if not np.all(np.isfinite(pts[mask])):
            raise ValueError("valid corner positions must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", mask)

    @property
    def n_frames(self) -> int:
        return self.points.shape[0]

    @property
    def all_valid(self) -> bool:
        return bool(self.valid.all())

    def corner_track(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Positions of corner (i, j) across its valid frames.

        Returns (points (k, 3), frame_indices (k,)).
        """
        mask = self.valid[:, i, j]
        return self.points[mask, i, j, :], np.flatnonzero(mask)
