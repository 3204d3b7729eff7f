import numpy as np
import pytest

from pantilt import io as pio
from pantilt.cli import (
    EXIT_DEGENERATE,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_USAGE,
    main,
)
from pantilt.geometry import AxisModel, line_angle
from pantilt.kinematics import PanTiltRig
from pantilt.observations import CornerObservations
from pantilt.simulate import corner_rest_positions, make_reference_rig


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def pipeline_files(tmp_path):
    pan = tmp_path / "pan.csv"
    tilt = tmp_path / "tilt.csv"
    truth = tmp_path / "truth.rig"
    assert run("simulate", "--reference-rig", "--axis", "pan", "--sigma", 0,
               "--out", pan, "--rig-out", truth) == EXIT_OK
    assert run("simulate", "--reference-rig", "--axis", "tilt", "--sigma", 0,
               "--out", tilt) == EXIT_OK
    return pan, tilt, truth


class TestSimulate:
    def test_writes_frames_and_truth(self, pipeline_files):
        pan, tilt, truth = pipeline_files
        obs, meta = pio.read_observations(pan)
        assert obs.n_frames == 28
        assert meta["axis"] == "pan"
        assert meta["noise.rng"].startswith("numpy-pcg64")
        obs_t, _ = pio.read_observations(tilt)
        assert obs_t.n_frames == 11
        rig, sim, _ = pio.read_rig_model(truth)
        assert sim is not None

    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ("simulate", "--reference-rig", "--axis", "pan", "--frames", 6,
                "--sigma", 1.0, "--seed", 9)
        assert run(*args, "--out", a) == EXIT_OK
        assert run(*args, "--out", b) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_too_few_frames_is_usage_error(self, tmp_path):
        assert run("simulate", "--reference-rig", "--axis", "pan", "--frames", 2,
                   "--out", tmp_path / "x.csv") == EXIT_USAGE

    def test_requires_some_rig(self, tmp_path):
        assert run("simulate", "--axis", "pan", "--out", tmp_path / "x.csv") == EXIT_USAGE

    def test_rig_file_without_board_is_usage_error(self, tmp_path):
        plain = tmp_path / "plain.rig"
        pio.write_rig_model(plain, make_reference_rig().rig())
        assert run("simulate", "--rig", plain, "--axis", "pan",
                   "--out", tmp_path / "x.csv") == EXIT_USAGE


class TestCalibrate:
    def test_round_trips_reference(self, pipeline_files, tmp_path, capsys):
        pan, tilt, _ = pipeline_files
        out = tmp_path / "cal.rig"
        assert run("calibrate", "--pan", pan, "--tilt", tilt, "--out", out) == EXIT_OK
        printed = capsys.readouterr().out
        assert "pan axis" in printed and "tilt axis" in printed
        rig, _, meta = pio.read_rig_model(out)
        truth = make_reference_rig()
        assert line_angle(rig.pan.direction, truth.pan_axis.direction) < 1e-6
        assert line_angle(rig.tilt.direction, truth.tilt_axis.direction) < 1e-6
        assert float(meta["pan.rms_plane_mm"]) < 1e-6

    def test_parse_error_exit_code(self, pipeline_files, tmp_path):
        pan, tilt, _ = pipeline_files
        bad = tmp_path / "bad.csv"
        bad.write_text(pan.read_text()[:200])
        assert run("calibrate", "--pan", bad, "--tilt", tilt, "--out", tmp_path / "o.rig") == EXIT_PARSE
        assert run("calibrate", "--pan", tmp_path / "missing.csv", "--tilt", tilt,
                   "--out", tmp_path / "o.rig") == EXIT_PARSE

    def test_too_few_frames_is_fit_error(self, pipeline_files, tmp_path):
        pan, tilt, _ = pipeline_files
        rig = make_reference_rig()
        rest = corner_rest_positions(rig)
        two = tmp_path / "two.csv"
        pio.write_observations(two, CornerObservations(rig.board, np.stack([rest, rest])))
        assert run("calibrate", "--pan", two, "--tilt", tilt, "--out", tmp_path / "o.rig") == EXIT_DEGENERATE

    def test_no_motion_is_fit_error(self, pipeline_files, tmp_path):
        pan, tilt, _ = pipeline_files
        rig = make_reference_rig()
        rest = corner_rest_positions(rig)
        still = tmp_path / "still.csv"
        pio.write_observations(still, CornerObservations(rig.board, np.stack([rest] * 4)))
        assert run("calibrate", "--pan", still, "--tilt", tilt, "--out", tmp_path / "o.rig") == EXIT_DEGENERATE


class TestForward:
    def test_rest_pose_prints_input_point(self, pipeline_files, capsys):
        _, _, truth = pipeline_files
        assert run("forward", "--rig", truth, "--pan-deg", 0, "--tilt-deg", 0,
                   "--point", 10, 20, -2000) == EXIT_OK
        out = capsys.readouterr().out
        assert "(10.0, 20.0, -2000.0)" in out


class TestIk:
    def test_converges_on_forward_target(self, pipeline_files, capsys):
        _, _, truth = pipeline_files
        assert run("ik", "--rig", truth, "--target", 150, -80, -2100) == EXIT_OK
        out = capsys.readouterr().out
        assert "converged  : True" in out

    def test_zero_target_is_usage_error(self, pipeline_files):
        _, _, truth = pipeline_files
        assert run("ik", "--rig", truth, "--target", 0, 0, 0) == EXIT_USAGE

    def test_degenerate_geometry_exit_code(self, tmp_path):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rig = PanTiltRig(AxisModel([0, 0, 1], [0, 0, 0]), AxisModel([0, 0, 1], [0, 0, 0]))
        path = tmp_path / "degenerate.rig"
        pio.write_rig_model(path, rig)
        assert run("ik", "--rig", path, "--target", 500, 0, -1000) == EXIT_NO_CONVERGENCE


class TestEvaluate:
    def test_rest_corner_experiment(self, pipeline_files, tmp_path, capsys):
        pan, tilt, truth = pipeline_files
        cal = tmp_path / "cal.rig"
        run("calibrate", "--pan", pan, "--tilt", tilt, "--out", cal)
        capsys.readouterr()
        report_path = tmp_path / "report.txt"
        csv_path = tmp_path / "trials.csv"
        assert run("evaluate", "--true-rig", truth, "--model", cal, "--rest-corners",
                   "--out", report_path, "--csv", csv_path) == EXIT_OK
        out = capsys.readouterr().out
        assert "trials     : 70" in out
        text = report_path.read_text()
        assert "n_trials = 70" in text
        assert float(dict(l.split(" = ") for l in text.splitlines())["rmse_mm"]) < 1.5
        assert len(csv_path.read_text().splitlines()) == 71

    def test_baseline_flag(self, pipeline_files, capsys):
        _, _, truth = pipeline_files
        assert run("evaluate", "--true-rig", truth, "--ideal-baseline", "--rest-corners") == EXIT_OK
        out = capsys.readouterr().out
        assert "trials     : 70" in out

    def test_targets_file(self, pipeline_files, tmp_path):
        _, _, truth = pipeline_files
        targets = tmp_path / "targets.csv"
        pio.write_targets(targets, [[100.0, 50.0, -2000.0], [-200.0, 0.0, -1900.0]])
        assert run("evaluate", "--true-rig", truth, "--ideal-baseline",
                   "--targets", targets) == EXIT_OK

    def test_empty_targets_is_degenerate(self, pipeline_files, tmp_path):
        _, _, truth = pipeline_files
        empty = tmp_path / "empty.csv"
        empty.write_text("# nothing here\n")
        assert run("evaluate", "--true-rig", truth, "--ideal-baseline",
                   "--targets", empty) == EXIT_DEGENERATE

    def test_model_required(self, pipeline_files):
        _, _, truth = pipeline_files
        assert run("evaluate", "--true-rig", truth, "--rest-corners") == EXIT_USAGE
