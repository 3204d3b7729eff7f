"""Plain-text file formats: observations, rig models, targets, reports.

All formats are line-oriented and diffable, with floats serialized by Python's
``repr`` (the shortest representation that round-trips the binary value), so
serialize -> parse -> serialize is byte-identical. Writes go to a temp file in
the destination directory and are renamed into place, so an interrupted run
never leaves a corrupt artifact.

Observations: ``#``-prefixed ``key = value`` header, then one CSV row per
corner sample::

    # format_version = 1
    # board.rows = 7
    ...
    frame,row,col,x,y,z,valid
    0,0,0,-450.0,300.0,-2000.0,1

Rig model: flat ``section.key = value`` lines. Axis fields mirror the usual
axis-model symbols (n_x/n_y/n_z for the direction, a/b/c for the pivot) so a
model can be transcribed by eye. Optional ``board.*`` keys carry the rest-pose
board placement of ground-truth (simulated) rigs; extra keys such as
calibration residuals round-trip verbatim.
"""
from __future__ import annotations

import os
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .geometry import AxisModel
from .kinematics import PanTiltRig
from .observations import BoardSpec, CornerObservations
from .simulate import SimRigParams

__all__ = [
    "FormatError",
    "serialize_observations",
    "parse_observations",
    "write_observations",
    "read_observations",
    "serialize_rig_model",
    "parse_rig_model",
    "write_rig_model",
    "read_rig_model",
    "sim_params_from_rig",
    "serialize_targets",
    "parse_targets",
    "write_targets",
    "read_targets",
    "serialize_report",
    "write_report",
    "serialize_trials_csv",
    "write_trials_csv",
    "atomic_write_text",
]

FORMAT_VERSION = 1

_AXIS_KEYS = ("n_x", "n_y", "n_z", "a", "b", "c")
_BOARD_KEYS = (
    "rows", "cols", "pitch_h", "pitch_w",
    "origin_x", "origin_y", "origin_z",
    "right_x", "right_y", "right_z",
    "down_x", "down_y", "down_z",
)


class FormatError(Exception):
    """Malformed or truncated input file."""


def _fmt(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def serialize_observations(obs: CornerObservations, meta: dict[str, str] | None = None) -> str:
    """Render an observations file as text. ``meta`` adds extra header keys
    (e.g. noise seed and generator for synthetic data)."""
    b = obs.board
    lines = [
        f"# format_version = {FORMAT_VERSION}",
        f"# board.rows = {b.rows}",
        f"# board.cols = {b.cols}",
        f"# board.pitch_h = {_fmt(b.pitch_h)}",
        f"# board.pitch_w = {_fmt(b.pitch_w)}",
        f"# frames = {obs.n_frames}",
    ]
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {value}")
    lines.append("frame,row,col,x,y,z,valid")
    for k in range(obs.n_frames):
        for i in range(b.rows):
            for j in range(b.cols):
                x, y, z = obs.points[k, i, j]
                flag = int(obs.valid[k, i, j])
                lines.append(f"{k},{i},{j},{_fmt(x)},{_fmt(y)},{_fmt(z)},{flag}")
    return "\n".join(lines) + "\n"


def write_observations(path, obs: CornerObservations, meta: dict[str, str] | None = None) -> None:
    atomic_write_text(path, serialize_observations(obs, meta))


def parse_observations(text: str) -> tuple[CornerObservations, dict[str, str]]:
    """Inverse of serialize_observations; returns the dataset and the extra
    header keys in file order."""
    header: dict[str, str] = {}
    rows: list[str] = []
    saw_columns = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise FormatError(f"line {lineno}: header line without '='")
            key, _, value = body.partition("=")
            header[key.strip()] = value.strip()
        elif not saw_columns:
            if line != "frame,row,col,x,y,z,valid":
                raise FormatError(f"line {lineno}: unexpected column header {line!r}")
            saw_columns = True
        else:
            rows.append(line)

    try:
        board = BoardSpec(
            rows=int(header.pop("board.rows")),
            cols=int(header.pop("board.cols")),
            pitch_h=float(header.pop("board.pitch_h")),
            pitch_w=float(header.pop("board.pitch_w")),
        )
        n_frames = int(header.pop("frames"))
        version = int(header.pop("format_version"))
    except KeyError as exc:
        raise FormatError(f"missing header key {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}") from exc
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {version}")
    if not saw_columns:
        raise FormatError("missing column header row")

    points = np.full((n_frames, board.rows, board.cols, 3), np.nan)
    valid = np.zeros((n_frames, board.rows, board.cols), dtype=bool)
    seen = np.zeros_like(valid)
    for line in rows:
        parts = line.split(",")
        if len(parts) != 7:
            raise FormatError(f"bad data row: {line!r}")
        try:
            k, i, j = int(parts[0]), int(parts[1]), int(parts[2])
            xyz = [float(p) for p in parts[3:6]]
            flag = int(parts[6])
        except ValueError as exc:
            raise FormatError(f"bad data row {line!r}: {exc}") from exc
        if not (0 <= k < n_frames and 0 <= i < board.rows and 0 <= j < board.cols):
            raise FormatError(f"index out of range in row {line!r}")
        points[k, i, j] = xyz
        valid[k, i, j] = bool(flag)
        seen[k, i, j] = True
    if not seen.all():
        missing = int((~seen).sum())
        raise FormatError(f"{missing} corner samples missing (incomplete grid)")
    try:
        obs = CornerObservations(board, points, valid)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return obs, header


def read_observations(path) -> tuple[CornerObservations, dict[str, str]]:
    return parse_observations(Path(path).read_text())


def _axis_lines(section: str, axis: AxisModel) -> list[str]:
    values = list(axis.direction) + list(axis.pivot)
    return [f"{section}.{key} = {_fmt(v)}" for key, v in zip(_AXIS_KEYS, values)]


def serialize_rig_model(
    rig: PanTiltRig,
    sim: SimRigParams | None = None,
    meta: dict[str, str] | None = None,
) -> str:
    """Render a rig-model file. Pass ``sim`` to include the board placement of
    a ground-truth rig; ``meta`` appends extra ``key = value`` lines verbatim."""
    lines = [f"format_version = {FORMAT_VERSION}"]
    lines += _axis_lines("pan", rig.pan)
    lines += _axis_lines("tilt", rig.tilt)
    if sim is not None:
        board_values = (
            sim.board.rows, sim.board.cols, _fmt(sim.board.pitch_h), _fmt(sim.board.pitch_w),
            *(_fmt(v) for v in sim.board_origin),
            *(_fmt(v) for v in sim.board_right),
            *(_fmt(v) for v in sim.board_down),
        )
        lines += [f"board.{key} = {val}" for key, val in zip(_BOARD_KEYS, board_values)]
    for key, value in (meta or {}).items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_rig_model(path, rig: PanTiltRig, sim: SimRigParams | None = None,
                    meta: dict[str, str] | None = None) -> None:
    atomic_write_text(path, serialize_rig_model(rig, sim, meta))


def parse_rig_model(text: str) -> tuple[PanTiltRig, SimRigParams | None, dict[str, str]]:
    """Inverse of serialize_rig_model: (rig, board placement or None, extras)."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()

    def take_float(key: str) -> float:
        try:
            return float(entries.pop(key))
        except KeyError as exc:
            raise FormatError(f"missing key {key}") from exc
        except ValueError as exc:
            raise FormatError(f"bad value for {key}: {exc}") from exc

    try:
        version = int(entries.pop("format_version"))
    except KeyError as exc:
        raise FormatError("missing key format_version") from exc
    except ValueError as exc:
        raise FormatError(f"bad format_version: {exc}") from exc
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {version}")

    axes = {}
    for section in ("pan", "tilt"):
        vals = [take_float(f"{section}.{key}") for key in _AXIS_KEYS]
        try:
            axes[section] = AxisModel(vals[:3], vals[3:])
        except ValueError as exc:
            raise FormatError(f"bad {section} axis: {exc}") from exc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # parallel-axes warning surfaces on use, not parse
        rig = PanTiltRig(axes["pan"], axes["tilt"])

    sim = None
    if any(key.startswith("board.") for key in entries):
        try:
            board = BoardSpec(
                rows=int(entries.pop("board.rows")),
                cols=int(entries.pop("board.cols")),
                pitch_h=float(entries.pop("board.pitch_h")),
                pitch_w=float(entries.pop("board.pitch_w")),
            )
            origin = [float(entries.pop(f"board.origin_{c}")) for c in "xyz"]
            right = [float(entries.pop(f"board.right_{c}")) for c in "xyz"]
            down = [float(entries.pop(f"board.down_{c}")) for c in "xyz"]
        except KeyError as exc:
            raise FormatError(f"incomplete board placement: missing {exc}") from exc
        except ValueError as exc:
            raise FormatError(f"bad board placement: {exc}") from exc
        sim = SimRigParams(rig.pan, rig.tilt, board, origin, right, down)
    return rig, sim, entries


def read_rig_model(path) -> tuple[PanTiltRig, SimRigParams | None, dict[str, str]]:
    return parse_rig_model(Path(path).read_text())


def sim_params_from_rig(rig: PanTiltRig, template: SimRigParams) -> SimRigParams:
    """Attach ``template``'s board placement to another rig's axes."""
    return SimRigParams(
        rig.pan, rig.tilt, template.board,
        template.board_origin, template.board_right, template.board_down,
    )


def serialize_targets(targets) -> str:
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    lines = ["# x,y,z target points, mm"]
    lines += [",".join(_fmt(c) for c in t) for t in targets]
    return "\n".join(lines) + "\n"


def write_targets(path, targets) -> None:
    atomic_write_text(path, serialize_targets(targets))


def parse_targets(text: str) -> np.ndarray:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 'x,y,z', got {line!r}")
        try:
            out.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return np.asarray(out, dtype=float).reshape(-1, 3)


def read_targets(path) -> np.ndarray:
    return parse_targets(Path(path).read_text())


def serialize_report(report, meta: dict[str, str] | None = None) -> str:
    """Render a targeting report's aggregate metrics as ``key = value`` lines."""
    lines = [f"format_version = {FORMAT_VERSION}"]
    for key, value in (meta or {}).items():
        lines.append(f"{key} = {value}")
    lines += [
        f"n_trials = {report.n_trials}",
        f"n_failed = {report.n_failed}",
        f"n_converged = {report.n_converged}",
        f"mean_iterations = {_fmt(report.mean_iterations)}",
        f"rmse_mm = {_fmt(report.rmse_mm)}",
        f"rmse_px = {_fmt(report.rmse_px)}",
        f"mae_x_mm = {_fmt(report.mae_x_mm)}",
        f"mae_y_mm = {_fmt(report.mae_y_mm)}",
        f"mae_z_mm = {_fmt(report.mae_z_mm)}",
        f"mae_x_px = {_fmt(report.mae_x_px)}",
        f"mae_y_px = {_fmt(report.mae_y_px)}",
    ]
    return "\n".join(lines) + "\n"


def write_report(path, report, meta: dict[str, str] | None = None) -> None:
    atomic_write_text(path, serialize_report(report, meta))


def serialize_trials_csv(report) -> str:
    """Flat per-trial CSV of a targeting report, for external plotting."""
    cols = (
        "trial,target_x,target_y,target_z,alpha_rad,beta_rad,"
        "aim_x,aim_y,aim_z,err_x_mm,err_y_mm,err_z_mm,err_u_px,err_v_px,"
        "iterations,converged,diagnostic"
    )
    lines = [cols]
    for idx, r in enumerate(report.records):
        pose = (_fmt(r.pose.alpha), _fmt(r.pose.beta)) if r.pose is not None else ("", "")
        aim = tuple(_fmt(v) for v in r.aim_point) if r.aim_point is not None else ("", "", "")
        emm = tuple(_fmt(v) for v in r.error_mm) if r.error_mm is not None else ("", "", "")
        epx = tuple(_fmt(v) for v in r.error_px) if r.error_px is not None else ("", "")
        lines.append(",".join([
            str(idx), *(_fmt(v) for v in r.target), *pose, *aim, *emm, *epx,
            str(r.iterations), str(int(r.converged)), r.diagnostic or "",
        ]))
    return "\n".join(lines) + "\n"


def write_trials_csv(path, report) -> None:
    atomic_write_text(path, serialize_trials_csv(report))
