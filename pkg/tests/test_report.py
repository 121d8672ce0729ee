import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rigcal.geometry import UnitQuaternion, quat_axis, quat_from_axis_angle, quat_multiply
from rigcal.online import CalibrationEstimate, CalibratorConfig, calibrate_online
from rigcal.report import (
    DEFAULT_NOISE_LEVELS,
    ERROR_COLUMNS,
    NoiseLevel,
    axis_angle_error,
    compute_frame_errors,
    direction_error,
    load_experiment_config,
    read_error_csv,
    read_estimates_csv,
    run_experiment,
    svg_plot,
    trial_seeds,
    write_error_csv,
    write_estimates_csv,
)
from rigcal.simulate import SimConfig, random_rig, simulate_pair

from .conftest import REPO


def estimate_of(rig, frame=1, active=True):
    return CalibrationEstimate(frame, rig.rotation, rig.translation.copy(), rig.scale, 20.0, active, False)


def test_perfect_estimate_has_zero_error():
    rig = random_rig(3)
    rec = compute_frame_errors(estimate_of(rig), rig)
    assert rec.rot_geodesic_deg == 0 and rec.rot_axis_angle_deg == 0
    assert rec.trans_direction_deg == 0 and rec.trans_norm_err == 0 and rec.scale_rel_err == 0
    rec.validate()


def test_same_axis_rotation_error():
    rig = random_rig(5)
    extra = quat_from_axis_angle(quat_axis(rig.rotation), math.radians(5))
    est = CalibrationEstimate(1, quat_multiply(rig.rotation, extra), rig.translation, rig.scale, 20.0, True, False)
    rec = compute_frame_errors(est, rig)
    assert rec.rot_axis_angle_deg == pytest.approx(0.0, abs=1e-6)
    assert rec.rot_geodesic_deg == pytest.approx(5.0, abs=1e-9)


def test_direction_error_cases():
    t = np.array([0.0, 0.6, 0.8])
    assert direction_error(-t, t) == pytest.approx(180.0)
    assert direction_error(np.zeros(3), t) == 180.0
    assert direction_error(np.zeros(3), np.zeros(3)) == 0.0
    assert direction_error([1, 0, 0], [0, 2, 0]) == pytest.approx(90.0)


def test_axis_error_is_gated_near_identity():
    ident = UnitQuaternion.identity()
    tiny = quat_from_axis_angle([1, 0, 0], 1e-12)
    q = quat_from_axis_angle([0, 1, 0], 0.5)
    assert axis_angle_error(tiny, q) == 0.0 and axis_angle_error(q, ident) == 0.0
    assert axis_angle_error(quat_from_axis_angle([1, 0, 0], 0.5), q) == pytest.approx(90.0)


def test_inactive_estimate_reports_sentinel():
    rig = random_rig(1)
    est = CalibrationEstimate(1, rig.rotation, np.zeros(3), 0.0, 1.0, False, True)
    rec = compute_frame_errors(est, rig)
    assert rec.trans_direction_deg == 180.0 and rec.scale_rel_err == 1.0 and not rec.translation_active


def test_error_csv_schema_and_round_trip(tmp_path):
    pair = simulate_pair(SimConfig(frames=70, seed=2))
    recs = [compute_frame_errors(e, pair.rig) for e in calibrate_online(pair.traj0, pair.traj1)]
    write_error_csv(tmp_path / "e.csv", recs)
    with open(tmp_path / "e.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ERROR_COLUMNS
    assert len(rows) == 71
    back = read_error_csv(tmp_path / "e.csv")
    assert back == recs
    frames = [r.frame for r in back]
    assert frames == sorted(set(frames))
    for r in back:
        r.validate()


def test_estimates_csv_round_trip(tmp_path):
    pair = simulate_pair(SimConfig(frames=65, seed=2))
    ests = calibrate_online(pair.traj0, pair.traj1)
    write_estimates_csv(tmp_path / "est.csv", ests)
    back = read_estimates_csv(tmp_path / "est.csv")
    for a, b in zip(ests, back):
        assert a.frame == b.frame and a.translation_active == b.translation_active
        assert np.array_equal(a.translation, b.translation) and a.scale == b.scale
        assert np.allclose(a.rotation.as_array(), b.rotation.as_array(), atol=1e-15)


def test_svg_structure():
    curves = {f"c{i}": ([1, 2, 3], [1.0, 0.5 * (i + 1), 0.1]) for i in range(4)}
    svg = svg_plot(curves, title="t", ylabel="err", log_y=True)
    root = ET.fromstring(svg)
    ns = {"s": "http://www.w3.org/2000/svg"}
    assert len(root.findall(".//s:polyline[@class='curve']", ns)) == 4


def test_svg_tolerates_zero_and_nonfinite_on_log_axis():
    svg = svg_plot({"a": ([1, 2, 3], [0.0, math.inf, 1e-3])}, log_y=True)
    ET.fromstring(svg)


def test_trial_seeds_are_deterministic():
    assert trial_seeds(7, 5) == trial_seeds(7, 5)
    assert trial_seeds(7, 5) != trial_seeds(8, 5)
    assert len(set(trial_seeds(0, 20))) == 20


def test_noise_free_experiment(tmp_path):
    rep = run_experiment(SimConfig(frames=128), [NoiseLevel(0.0, 0.0)], CalibratorConfig(), trials=1, out_dir=tmp_path)
    assert rep.metric(0, "rot_geodesic_deg")[0, -1] < 1e-6


def test_experiment_outputs(tmp_path):
    rep = run_experiment(SimConfig(frames=64), DEFAULT_NOISE_LEVELS, CalibratorConfig(warmup_frames=30), trials=2, out_dir=tmp_path)
    with open(tmp_path / "frames.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["noise_level", "trial"] + ERROR_COLUMNS
    assert len(rows) - 1 == 4 * 2 * 64
    ns = {"s": "http://www.w3.org/2000/svg"}
    for name in ("rot_geodesic_deg", "rot_axis_angle_deg", "trans_direction_deg", "trans_norm_err", "scale_rel_err"):
        root = ET.parse(tmp_path / f"{name}.svg").getroot()
        assert len(root.findall(".//s:polyline[@class='curve']", ns)) == 4
    assert (tmp_path / "level3" / "trial001.csv").exists()
    assert rep.errors[0].shape == (2, 64, 5)


def test_parallel_experiment_matches_serial(tmp_path):
    args = (SimConfig(frames=40), DEFAULT_NOISE_LEVELS[:2], CalibratorConfig(warmup_frames=10))
    run_experiment(*args, trials=2, out_dir=tmp_path / "a", jobs=1)
    run_experiment(*args, trials=2, out_dir=tmp_path / "b", jobs=2)
    assert (tmp_path / "a" / "frames.csv").read_bytes() == (tmp_path / "b" / "frames.csv").read_bytes()


def test_shipped_config_loads():
    cfg = load_experiment_config(REPO / "configs" / "experiment.ini")
    assert cfg.trials == 20 and cfg.sim.frames == 128
    assert [(n.rot_std_deg, n.trans_std) for n in cfg.noise_levels] == [(0.1, 0.001), (0.5, 0.005), (1.0, 0.01), (2.0, 0.02)]
    assert cfg.calibrator.warmup_frames == 60 and cfg.calibrator.forgetting == 1.0


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[noise]\nrot_std_deg = 0.1 0.5\ntrans_std = 0.001\n")
    with pytest.raises(ValueError):
        load_experiment_config(bad)
