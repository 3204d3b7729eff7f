"""Command-line pipeline: simulate -> calibrate -> forward/ik -> evaluate.

Angles are degrees at the CLI boundary (radians internally); all lengths are
millimeters. Exit codes: 0 success, 2 usage error, 3 file parse error,
4 degenerate data (calibration/evaluation), 5 solver did not converge.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import io as pio
from .calibration import CalibrationError, calibrate_axis
from .evaluate import (
    DEFAULT_INTRINSICS,
    CameraIntrinsics,
    EmptyBatch,
    run_targeting_experiment,
)
from .kinematics import IKConfig, PanTiltPose, PanTiltRig, solve_ik, world_from_local
from .observations import CornerObservations
from .simulate import (
    REFERENCE_PAN_FRAMES,
    REFERENCE_TILT_FRAMES,
    RNG_DESCRIPTION,
    NoiseSpec,
    SimRigParams,
    corner_rest_positions,
    generate_axis_sweep,
    make_reference_rig,
    sweep_angles,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DEGENERATE = 4
EXIT_NO_CONVERGENCE = 5


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fail(message: str, code: int) -> "_CliError":
    return _CliError(message, code)


def _load_rig(path) -> tuple[PanTiltRig, SimRigParams | None]:
    try:
        rig, sim, _ = pio.read_rig_model(path)
    except OSError as exc:
        raise _fail(f"cannot read rig file {path}: {exc}", EXIT_PARSE) from exc
    except pio.FormatError as exc:
        raise _fail(f"bad rig file {path}: {exc}", EXIT_PARSE) from exc
    return rig, sim


def _load_observations(path) -> CornerObservations:
    try:
        obs, _ = pio.read_observations(path)
    except OSError as exc:
        raise _fail(f"cannot read observations {path}: {exc}", EXIT_PARSE) from exc
    except pio.FormatError as exc:
        raise _fail(f"bad observations file {path}: {exc}", EXIT_PARSE) from exc
    return obs


def _resolve_sim_rig(args, what: str) -> SimRigParams:
    """Pick the true rig for simulate/evaluate: the built-in reference fixture
    or a rig file that carries a board placement."""
    if args.reference_rig:
        return make_reference_rig()
    if not getattr(args, what):
        raise _fail(f"either --reference-rig or --{what.replace('_', '-')} is required", EXIT_USAGE)
    _, sim = _load_rig(getattr(args, what))
    if sim is None:
        raise _fail(
            f"rig file {getattr(args, what)} has no board placement (board.* keys); "
            "only ground-truth rig files can drive this command",
            EXIT_USAGE,
        )
    return sim


def cmd_simulate(args) -> int:
    params = _resolve_sim_rig(args, "rig")
    if args.frames is None:
        args.frames = REFERENCE_PAN_FRAMES if args.axis == "pan" else REFERENCE_TILT_FRAMES
    if args.frames < 3:
        raise _fail("--frames must be at least 3", EXIT_USAGE)
    if args.sigma < 0:
        raise _fail("--sigma must be non-negative", EXIT_USAGE)
    angles = sweep_angles(args.frames, (math.radians(args.sweep_start_deg),
                                        math.radians(args.sweep_stop_deg)))
    noise = NoiseSpec(sigma=args.sigma, seed=args.seed)
    obs = generate_axis_sweep(params, args.axis, angles, noise)
    meta = {
        "axis": args.axis,
        "sweep_start_deg": repr(float(args.sweep_start_deg)),
        "sweep_stop_deg": repr(float(args.sweep_stop_deg)),
        "noise.sigma": repr(float(args.sigma)),
        "noise.seed": str(args.seed),
        "noise.rng": RNG_DESCRIPTION,
    }
    pio.write_observations(args.out, obs, meta)
    print(f"wrote {obs.n_frames} frames x {params.board.rows}x{params.board.cols} corners to {args.out}")
    if args.rig_out:
        pio.write_rig_model(args.rig_out, params.rig(), sim=params)
        print(f"wrote ground-truth rig to {args.rig_out}")
    return EXIT_OK


def _print_axis(name: str, report) -> None:
    d, p = report.axis.direction, report.axis.pivot
    print(f"{name} axis:")
    print(f"  direction  ({d[0]: .9f}, {d[1]: .9f}, {d[2]: .9f})")
    print(f"  pivot mm   ({p[0]: .4f}, {p[1]: .4f}, {p[2]: .4f})")
    print(f"  rms residual: plane {report.plane_fit.rms_residual:.6g} mm, "
          f"circle {report.circle_fit.rms_residual:.6g} mm")


def cmd_calibrate(args) -> int:
    pan_obs = _load_observations(args.pan)
    tilt_obs = _load_observations(args.tilt)
    try:
        pan_report = calibrate_axis(pan_obs, polish=not args.no_polish)
        tilt_report = calibrate_axis(tilt_obs, polish=not args.no_polish)
    except CalibrationError as exc:
        raise _fail(f"calibration failed: {exc}", EXIT_DEGENERATE) from exc
    rig = PanTiltRig(pan_report.axis, tilt_report.axis)
    _print_axis("pan", pan_report)
    _print_axis("tilt", tilt_report)
    meta = {
        "pan.rms_plane_mm": repr(pan_report.plane_fit.rms_residual),
        "pan.rms_circle_mm": repr(pan_report.circle_fit.rms_residual),
        "tilt.rms_plane_mm": repr(tilt_report.plane_fit.rms_residual),
        "tilt.rms_circle_mm": repr(tilt_report.circle_fit.rms_residual),
    }
    pio.write_rig_model(args.out, rig, meta=meta)
    print(f"wrote calibrated rig to {args.out}")
    return EXIT_OK


def cmd_forward(args) -> int:
    rig, _ = _load_rig(args.rig)
    pose = PanTiltPose(math.radians(args.pan_deg), math.radians(args.tilt_deg))
    p = world_from_local(rig, pose, args.point)
    print(f"world point: ({float(p[0])!r}, {float(p[1])!r}, {float(p[2])!r})")
    return EXIT_OK


def _ik_config(args) -> IKConfig:
    return IKConfig(tolerance=args.tolerance, max_iterations=args.max_iterations,
                    sz_unit_scale=args.sz_unit_scale)


def cmd_ik(args) -> int:
    rig, _ = _load_rig(args.rig)
    target = np.asarray(args.target, dtype=float)
    if float(np.linalg.norm(target)) == 0.0:
        raise _fail("target must have nonzero norm", EXIT_USAGE)
    sol = solve_ik(rig, target, _ik_config(args))
    print(f"pan   alpha: {sol.pose.alpha!r} rad ({math.degrees(sol.pose.alpha):.4f} deg)")
    print(f"tilt  beta : {sol.pose.beta!r} rad ({math.degrees(sol.pose.beta):.4f} deg)")
    print(f"sz         : {sol.sz!r} mm")
    print(f"iterations : {sol.iterations}")
    print(f"final error: {sol.final_error:.6g} mm")
    print(f"converged  : {sol.converged}" + (f" ({sol.diagnostic})" if sol.diagnostic else ""))
    return EXIT_OK if sol.converged else EXIT_NO_CONVERGENCE


def cmd_evaluate(args) -> int:
    true_sim = _resolve_sim_rig(args, "true_rig")
    if args.ideal_baseline:
        model = None
    elif args.model:
        model, _ = _load_rig(args.model)
    else:
        raise _fail("either --model or --ideal-baseline is required", EXIT_USAGE)

    if args.rest_corners:
        targets = corner_rest_positions(true_sim).reshape(-1, 3)
    elif args.targets:
        try:
            targets = pio.read_targets(args.targets)
        except OSError as exc:
            raise _fail(f"cannot read targets {args.targets}: {exc}", EXIT_PARSE) from exc
        except pio.FormatError as exc:
            raise _fail(f"bad targets file {args.targets}: {exc}", EXIT_PARSE) from exc
    else:
        raise _fail("either --targets or --rest-corners is required", EXIT_USAGE)
    if len(targets) == 0:
        raise _fail("no targets to evaluate (empty batch)", EXIT_DEGENERATE)

    intrinsics = CameraIntrinsics(fx=args.fx, fy=args.fy, cx=args.cx, cy=args.cy)
    try:
        report = run_targeting_experiment(true_sim, model, targets, intrinsics, _ik_config(args))
    except EmptyBatch as exc:
        raise _fail(f"evaluation failed: {exc}", EXIT_DEGENERATE) from exc

    print(f"trials     : {report.n_trials} ({report.n_failed} failed, {report.n_converged} converged)")
    print(f"rmse       : {report.rmse_mm:.4f} mm, {report.rmse_px:.4f} px")
    print(f"mae mm     : x {report.mae_x_mm:.4f}, y {report.mae_y_mm:.4f}, z {report.mae_z_mm:.4f}")
    print(f"mae px     : x {report.mae_x_px:.4f}, y {report.mae_y_px:.4f}")
    print(f"iterations : mean {report.mean_iterations:.2f}")
    meta = {"model": "ideal-baseline" if model is None else str(args.model)}
    if args.out:
        pio.write_report(args.out, report, meta)
        print(f"wrote report to {args.out}")
    if args.csv:
        pio.write_trials_csv(args.csv, report)
        print(f"wrote per-trial csv to {args.csv}")
    return EXIT_OK


def _add_ik_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tolerance", type=float, default=1.0, help="convergence tolerance, mm")
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--sz-unit-scale", type=float, default=1000.0,
                   help="mm per internal sz unit (1000 = solve sz in meters)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pantilt",
        description="Calibrate and aim arbitrarily assembled pan-tilt camera platforms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic calibration sweep")
    p.add_argument("--reference-rig", action="store_true",
                   help="use the built-in reference fixture as the true rig")
    p.add_argument("--rig", help="ground-truth rig file (must carry board.* placement)")
    p.add_argument("--axis", choices=("pan", "tilt"), required=True)
    p.add_argument("--frames", type=int, default=None,
                   help="frame count (default: 28 pan / 11 tilt)")
    p.add_argument("--sweep-start-deg", type=float, default=-90.0)
    p.add_argument("--sweep-stop-deg", type=float, default=90.0)
    p.add_argument("--sigma", type=float, default=0.0, help="corner noise std-dev, mm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="observations file to write")
    p.add_argument("--rig-out", help="also write the ground-truth rig model here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="recover both axes from sweep files")
    p.add_argument("--pan", required=True, help="pan sweep observations file")
    p.add_argument("--tilt", required=True, help="tilt sweep observations file")
    p.add_argument("--out", required=True, help="rig model file to write")
    p.add_argument("--no-polish", action="store_true",
                   help="skip the Gauss-Newton circle-fit refinement")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("forward", help="map a local point to world at a pose")
    p.add_argument("--rig", required=True)
    p.add_argument("--pan-deg", type=float, required=True)
    p.add_argument("--tilt-deg", type=float, required=True)
    p.add_argument("--point", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("ik", help="solve pan/tilt/sz aiming at a world target")
    p.add_argument("--rig", required=True)
    p.add_argument("--target", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    _add_ik_flags(p)
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("evaluate", help="targeting experiment against a true rig")
    p.add_argument("--reference-rig", action="store_true",
                   help="use the built-in reference fixture as the true rig")
    p.add_argument("--true-rig", help="ground-truth rig file (must carry board.* placement)")
    p.add_argument("--model", help="calibrated rig file to aim with")
    p.add_argument("--ideal-baseline", action="store_true",
                   help="aim with the ideal-axes closed form instead of a model file")
    p.add_argument("--targets", help="targets file (x,y,z per line)")
    p.add_argument("--rest-corners", action="store_true",
                   help="use the board's rest-pose corners as targets")
    p.add_argument("--fx", type=float, default=DEFAULT_INTRINSICS.fx)
    p.add_argument("--fy", type=float, default=DEFAULT_INTRINSICS.fy)
    p.add_argument("--cx", type=float, default=DEFAULT_INTRINSICS.cx)
    p.add_argument("--cy", type=float, default=DEFAULT_INTRINSICS.cy)
    p.add_argument("--out", help="write aggregate metrics here")
    p.add_argument("--csv", help="write per-trial records here")
    _add_ik_flags(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
