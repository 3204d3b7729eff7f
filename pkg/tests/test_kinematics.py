import math
import warnings

import numpy as np
import pytest

from pantilt.geometry import AxisModel, is_rigid_transform, rotate_about_axis, unit_vector
from pantilt.kinematics import (
    IKConfig,
    PanTiltPose,
    PanTiltRig,
    ParallelAxesWarning,
    forward_transform,
    ik_jacobian,
    solve_ik,
    world_from_local,
)


def ideal_rig():
    return PanTiltRig(AxisModel([0.0, 1.0, 0.0], [0.0, 0.0, 0.0]),
                      AxisModel([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]))


def random_rig(rng, pivot_span=500.0):
    while True:
        pan_dir = unit_vector(rng.standard_normal(3))
        tilt_dir = unit_vector(rng.standard_normal(3))
        if abs(float(np.dot(pan_dir, tilt_dir))) < 0.95:
            break
    return PanTiltRig(
        AxisModel(pan_dir, rng.uniform(-pivot_span, pivot_span, 3)),
        AxisModel(tilt_dir, rng.uniform(-pivot_span, pivot_span, 3)),
    )


def fd_jacobian(rig, theta, scale, h=1e-6):
    """Independent central-difference oracle for the IK Jacobian."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros((3, 3))
    for c in range(3):
        hi, lo = theta.copy(), theta.copy()
        hi[c] += h
        lo[c] -= h
        p_hi = world_from_local(rig, PanTiltPose(hi[0], hi[1]), (0.0, 0.0, hi[2] * scale))
        p_lo = world_from_local(rig, PanTiltPose(lo[0], lo[1]), (0.0, 0.0, lo[2] * scale))
        out[:, c] = (p_hi - p_lo) / (2.0 * h)
    return out


class TestForwardTransform:
    def test_rest_pose_is_identity(self, reference_rig, calibrated_reference):
        m = forward_transform(calibrated_reference, PanTiltPose(0.0, 0.0))
        assert np.max(np.abs(m - np.eye(4))) < 1e-12

    def test_ideal_pan(self):
        rig = ideal_rig()
        alpha = 0.83
        got = world_from_local(rig, PanTiltPose(alpha, 0.0), (0.0, 0.0, -1.0))
        assert np.allclose(got, [-math.sin(alpha), 0.0, -math.cos(alpha)], atol=1e-12)

    def test_point_on_tilt_axis_fixed_under_tilt(self):
        rng = np.random.default_rng(0)
        rig = random_rig(rng)
        p = rig.tilt.pivot + 123.0 * rig.tilt.direction
        got = world_from_local(rig, PanTiltPose(0.0, 0.77), p)
        assert np.linalg.norm(got - p) < 1e-9

    def test_matches_sequential_rotation_oracle(self, calibrated_reference):
        rig = calibrated_reference
        rng = np.random.default_rng(1)
        for _ in range(100):
            pose = PanTiltPose(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
            p = rng.uniform(-2000, 2000, 3)
            via_matrix = world_from_local(rig, pose, p)
            via_points = rotate_about_axis(
                rotate_about_axis(p, rig.tilt, pose.beta), rig.pan, pose.alpha
            )
            assert np.linalg.norm(via_matrix - via_points) < 1e-9

    def test_reference_pose_matches_oracle(self, calibrated_reference):
        pose = PanTiltPose(0.3, -0.2)
        p = np.array([0.0, 0.0, 500.0])
        got = world_from_local(calibrated_reference, pose, p)
        expected = rotate_about_axis(
            rotate_about_axis(p, calibrated_reference.tilt, pose.beta),
            calibrated_reference.pan,
            pose.alpha,
        )
        assert np.linalg.norm(got - expected) < 1e-9

    def test_rigidity_for_random_rigs(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            rig = random_rig(rng)
            m = forward_transform(rig, PanTiltPose(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)))
            assert is_rigid_transform(m, tol=1e-10)

    def test_pivot_slide_invariance(self):
        rng = np.random.default_rng(3)
        rig = random_rig(rng)
        pose = PanTiltPose(0.6, -0.4)
        probe = rng.uniform(-1000, 1000, 3)
        base = world_from_local(rig, pose, probe)
        for _ in range(20):
            t_pan, t_tilt = rng.uniform(-1e4, 1e4, 2)
            slid = PanTiltRig(
                AxisModel(rig.pan.direction, rig.pan.pivot + t_pan * rig.pan.direction),
                AxisModel(rig.tilt.direction, rig.tilt.pivot + t_tilt * rig.tilt.direction),
            )
            assert np.linalg.norm(world_from_local(slid, pose, probe) - base) < 1e-9

    def test_tilt_before_pan_ordering_matters(self):
        rng = np.random.default_rng(4)
        diffs = []
        for _ in range(10):
            rig = random_rig(rng)
            pose = PanTiltPose(0.5, 0.4)
            from pantilt.geometry import axis_rotation_matrix

            tilt_first = axis_rotation_matrix(rig.pan, pose.alpha) @ axis_rotation_matrix(rig.tilt, pose.beta)
            pan_first = axis_rotation_matrix(rig.tilt, pose.beta) @ axis_rotation_matrix(rig.pan, pose.alpha)
            assert np.allclose(forward_transform(rig, pose), tilt_first)
            diffs.append(np.max(np.abs(tilt_first - pan_first)))
        assert max(diffs) > 1e-3

    def test_parallel_axes_warn(self):
        with pytest.warns(ParallelAxesWarning):
            PanTiltRig(AxisModel([0, 0, 1], [0, 0, 0]), AxisModel([0, 0, 1], [10, 0, 0]))


class TestJacobian:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        cfg = IKConfig()
        for _ in range(100):
            rig = random_rig(rng)
            theta = np.array([rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-8.0, -0.45)])
            analytic = ik_jacobian(rig, theta, cfg)
            numeric = fd_jacobian(rig, theta, cfg.sz_unit_scale)
            rel = np.max(np.abs(analytic - numeric)) / np.max(np.abs(numeric))
            assert rel < 1e-4

    def test_fd_mode_agrees_with_analytic(self, calibrated_reference):
        theta = np.array([0.4, -0.3, -2.1])
        analytic = ik_jacobian(calibrated_reference, theta, IKConfig())
        fd = ik_jacobian(calibrated_reference, theta, IKConfig(use_fd_jacobian=True))
        assert np.max(np.abs(analytic - fd)) / np.max(np.abs(fd)) < 1e-6

    def test_sz_column_norm_is_exactly_scale(self):
        rng = np.random.default_rng(6)
        for scale in (1.0, 1000.0, 250.0):
            rig = random_rig(rng)
            jac = ik_jacobian(rig, (0.3, -0.8, -1.5), IKConfig(sz_unit_scale=scale))
            assert abs(np.linalg.norm(jac[:, 2]) - scale) < 1e-9 * scale

    def test_ideal_rig_alpha_column(self):
        # At rest with sz = -1000 mm the pan column is (-1000, 0, 0) mm/rad,
        # the derivative of (-1000 sin(a), 0, -1000 cos(a)); cross-checked
        # against finite differences.
        rig = ideal_rig()
        cfg = IKConfig()
        jac = ik_jacobian(rig, (0.0, 0.0, -1.0), cfg)
        assert np.allclose(jac[:, 0], [-1000.0, 0.0, 0.0], atol=1e-9)
        numeric = fd_jacobian(rig, (0.0, 0.0, -1.0), cfg.sz_unit_scale)
        assert np.max(np.abs(jac - numeric)) < 1e-3


class TestSolveIK:
    def test_forward_generated_targets_recovered(self):
        rng = np.random.default_rng(7)
        # Arbitrary random rigs can be poorly conditioned for a first-order
        # solver; give them headroom beyond the default iteration cap.
        cfg = IKConfig(max_iterations=500)
        for _ in range(25):
            rig = random_rig(rng, pivot_span=300.0)
            alpha, beta = rng.uniform(-1.2, 1.2, 2)
            sz = rng.uniform(-3000.0, -500.0)
            target = world_from_local(rig, PanTiltPose(alpha, beta), (0.0, 0.0, sz))
            if np.linalg.norm(target) < 1.0:
                continue
            sol = solve_ik(rig, target, cfg)
            assert sol.converged, sol
            assert sol.final_error < cfg.tolerance
            achieved = world_from_local(rig, sol.pose, (0.0, 0.0, sol.sz))
            assert np.linalg.norm(achieved - target) < cfg.tolerance

    def test_rest_aim_converges_immediately(self):
        sol = solve_ik(ideal_rig(), (0.0, 0.0, -1000.0))
        assert sol.converged
        assert sol.iterations <= 1
        assert sol.final_error < 1e-9
        assert abs(sol.sz + 1000.0) < 1e-9

    def test_error_decreases_for_converging_runs(self, calibrated_reference):
        rng = np.random.default_rng(8)
        for _ in range(10):
            target = np.array([rng.uniform(-500, 500), rng.uniform(-400, 400), rng.uniform(-2500, -1500)])
            initial = np.linalg.norm(
                target - world_from_local(calibrated_reference, PanTiltPose(0, 0),
                                          (0.0, 0.0, -float(np.linalg.norm(target))))
            )
            sol = solve_ik(calibrated_reference, target)
            if sol.converged and initial > sol.final_error:
                assert sol.final_error < initial
            assert sol.iterations <= 100

    def test_converged_optical_axis_passes_through_target(self, calibrated_reference):
        rng = np.random.default_rng(9)
        for _ in range(10):
            target = np.array([rng.uniform(-500, 500), rng.uniform(-400, 400), rng.uniform(-2500, -1500)])
            sol = solve_ik(calibrated_reference, target)
            assert sol.converged
            m = forward_transform(calibrated_reference, sol.pose)
            origin = m[:3, 3]
            direction = m[:3, :3] @ np.array([0.0, 0.0, -1.0])
            miss = np.cross(target - origin, direction)
            assert np.linalg.norm(miss) < 1.0  # line-to-target distance, mm

    def test_zero_target_rejected(self, calibrated_reference):
        with pytest.raises(ValueError):
            solve_ik(calibrated_reference, (0.0, 0.0, 0.0))

    def test_stalled_on_degenerate_rig(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ParallelAxesWarning)
            rig = PanTiltRig(AxisModel([0, 0, 1], [0, 0, 0]), AxisModel([0, 0, 1], [0, 0, 0]))
        sol = solve_ik(rig, (500.0, 0.0, -1000.0))
        assert not sol.converged
        assert sol.diagnostic == "stalled"

    def test_range_limited_target(self):
        # Behind-and-above target needs |beta| > pi/2 on an ideal rig.
        sol = solve_ik(ideal_rig(), (0.0, 800.0, 100.0))
        assert not sol.converged
        assert sol.diagnostic == "range_limited"
        assert abs(sol.pose.beta) <= math.pi / 2 + 1e-12

    def test_sz_reported_in_mm(self, calibrated_reference):
        target = np.array([200.0, -150.0, -2200.0])
        sol = solve_ik(calibrated_reference, target)
        assert sol.converged
        assert -3000.0 < sol.sz < -1500.0

    def test_mm_scale_config_degrades(self, calibrated_reference, reference_rig):
        from pantilt.simulate import corner_rest_positions

        targets = corner_rest_positions(reference_rig).reshape(-1, 3)[::7]
        meter = [solve_ik(calibrated_reference, t, IKConfig()) for t in targets]
        mm = [solve_ik(calibrated_reference, t, IKConfig(sz_unit_scale=1.0)) for t in targets]
        meter_rate = np.mean([s.converged for s in meter])
        mm_rate = np.mean([s.converged for s in mm])
        meter_iters = np.mean([s.iterations for s in meter])
        mm_iters = np.mean([s.iterations for s in mm])
        assert (mm_iters > meter_iters) or (mm_rate < meter_rate)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IKConfig(tolerance=0.0)
        with pytest.raises(ValueError):
            IKConfig(max_iterations=0)
        with pytest.raises(ValueError):
            IKConfig(sz_unit_scale=-1.0)
        with pytest.raises(ValueError):
            PanTiltPose(math.nan, 0.0)
