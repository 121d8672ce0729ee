import json

import numpy as np
import pytest

from rigcal.errors import EmptyTrajectory, NotARotation, NotUnitQuaternion, ParseError
from rigcal.geometry import SimilarityTransform, Trajectory, UnitQuaternion, compose
from rigcal.poseio import (
    invert_poses,
    read_kitti_poses,
    read_rig_ground_truth,
    read_trajectory,
    read_tum_trajectory,
    rebase_to_first,
    write_kitti_poses,
    write_rig_ground_truth,
    write_trajectory,
    write_tum_trajectory,
)
from rigcal.simulate import random_rig

from .conftest import DATA, random_motion, random_trajectory

# file, reader, error type, line, token (None: no token index expected)
MALFORMED = [
    ("kitti_short_row.txt", read_kitti_poses, ParseError, 3, None),
    ("kitti_long_row.txt", read_kitti_poses, ParseError, 2, None),
    ("kitti_bad_token.txt", read_kitti_poses, ParseError, 4, 7),
    ("kitti_nan.txt", read_kitti_poses, ParseError, 2, 12),
    ("kitti_reflection.txt", read_kitti_poses, NotARotation, 3, None),
    ("kitti_scaled_rotation.txt", read_kitti_poses, NotARotation, 5, None),
    ("kitti_blank_then_bad.txt", read_kitti_poses, ParseError, 4, None),
    ("tum_short_row.txt", read_tum_trajectory, ParseError, 3, None),
    ("tum_bad_quaternion.txt", read_tum_trajectory, NotUnitQuaternion, 4, None),
    ("tum_bad_timestamp.txt", read_tum_trajectory, ParseError, 2, 1),
]

IDENTITY_ROW = "1 0 0 0 0 1 0 0 0 0 1 0\n"


def max_pose_diff(a: Trajectory, b: Trajectory) -> float:
    assert len(a) == len(b)
    return max(float(np.max(np.abs(p.as_matrix() - q.as_matrix()))) for p, q in zip(a, b))


def check_malformed(name, reader, error, line, token):
    with pytest.raises(error) as info:
        reader(DATA / "malformed" / name)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
    if token is not None:
        assert info.value.token == token


@pytest.mark.parametrize("name, reader, error, line, token", MALFORMED, ids=[m[0] for m in MALFORMED])
def test_malformed_files_report_line(name, reader, error, line, token):
    check_malformed(name, reader, error, line, token)


def test_kitti_identity_rows(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text(IDENTITY_ROW)
    traj = read_kitti_poses(f)
    assert len(traj) == 1 and traj[0].is_identity()
    f.write_text(IDENTITY_ROW + "\n" + IDENTITY_ROW)
    traj = read_kitti_poses(f)
    assert len(traj) == 2 and all(p.is_identity() for p in traj)


def test_kitti_round_trip(tmp_path, rng):
    traj = rebase_to_first(random_trajectory(rng, 50))
    write_kitti_poses(tmp_path / "p.txt", traj)
    assert max_pose_diff(read_kitti_poses(tmp_path / "p.txt"), traj) < 1e-9


def test_kitti_reader_rebases(tmp_path, rng):
    traj = random_trajectory(rng, 10)
    write_kitti_poses(tmp_path / "p.txt", traj)
    back = read_kitti_poses(tmp_path / "p.txt")
    assert back[0].is_identity(tol=1e-12)
    assert max_pose_diff(back, rebase_to_first(traj)) < 1e-9


def test_kitti_rounded_rotation_is_projected(tmp_path, rng):
    traj = random_trajectory(rng, 5)
    rows = [" ".join(f"{v:.5f}" for v in np.hstack((p.R, p.translation[:, None])).ravel()) for p in traj]
    (tmp_path / "p.txt").write_text("\n".join(rows) + "\n")
    back = read_kitti_poses(tmp_path / "p.txt")
    assert max_pose_diff(back, rebase_to_first(traj)) < 1e-4


def test_tum_identity_and_order(tmp_path):
    f = tmp_path / "t.txt"
    f.write_text("0.0 0 0 0 0 0 0 1\n")
    traj = read_tum_trajectory(f)
    assert len(traj) == 1 and traj[0].is_identity()
    # on disk (qx qy qz qw): 90° about x
    s = np.sqrt(0.5)
    f.write_text(f"0.0 0 0 0 0 0 0 1\n1.5 1 2 3 {s} 0 0 {s}\n")
    traj = read_tum_trajectory(f)
    assert np.allclose(traj[1].rotation.as_array(), [s, s, 0, 0])
    assert traj[1].translation.tolist() == [1, 2, 3]
    assert traj.timestamps == (0.0, 1.5)


def test_tum_round_trip(tmp_path, rng):
    traj = rebase_to_first(random_trajectory(rng, 50))
    traj = Trajectory(traj.poses, tuple(0.05 * i for i in range(len(traj))))
    write_tum_trajectory(tmp_path / "t.txt", traj)
    back = read_tum_trajectory(tmp_path / "t.txt")
    assert max_pose_diff(back, traj) < 1e-9
    assert back.timestamps == traj.timestamps


def test_tum_comment_only_is_empty():
    with pytest.raises(EmptyTrajectory):
        read_tum_trajectory(DATA / "tum_comment_only.txt")


def test_empty_kitti_file(tmp_path):
    (tmp_path / "e.txt").write_text("\n\n")
    with pytest.raises(EmptyTrajectory):
        read_kitti_poses(tmp_path / "e.txt")


def test_format_dispatch(tmp_path, rng):
    traj = rebase_to_first(random_trajectory(rng, 5))
    for fmt in ("kitti", "tum"):
        write_trajectory(tmp_path / fmt, traj, fmt)
        assert max_pose_diff(read_trajectory(tmp_path / fmt, fmt), traj) < 1e-9
    with pytest.raises(ValueError):
        read_trajectory(tmp_path / "kitti", "euroc")


def test_rebase_examples(rng):
    traj = rebase_to_first(random_trajectory(rng, 10))
    assert max_pose_diff(rebase_to_first(traj), traj) < 1e-12
    P = random_motion(rng)
    const = rebase_to_first(Trajectory((P,) * 5))
    assert all(p.is_identity(tol=1e-12) for p in const)


def test_rebase_keeps_relative_motions(rng):
    traj = random_trajectory(rng, 30)
    a, b = traj.relative_motions(), rebase_to_first(traj).relative_motions()
    for m, n in zip(a, b):
        assert np.max(np.abs(m.as_matrix() - n.as_matrix())) < 1e-12


def test_invert_poses(rng):
    traj = random_trajectory(rng, 5)
    inv = invert_poses(traj)
    for p, q in zip(traj, inv):
        assert compose(p, q).is_identity(tol=1e-12)


def test_rig_round_trip(tmp_path):
    ident = SimilarityTransform(UnitQuaternion.identity(), np.zeros(3), 1.0)
    write_rig_ground_truth(tmp_path / "r.json", ident)
    back = read_rig_ground_truth(tmp_path / "r.json")
    assert back.rotation == ident.rotation and not np.any(back.translation) and back.scale == 1.0
    rig = random_rig(7)
    write_rig_ground_truth(tmp_path / "r.json", rig)
    back = read_rig_ground_truth(tmp_path / "r.json")
    assert np.max(np.abs(back.rotation.as_array() - rig.rotation.as_array())) < 1e-12
    assert np.max(np.abs(back.translation - rig.translation)) < 1e-12
    assert abs(back.scale - rig.scale) < 1e-12


@pytest.mark.parametrize("field", ["scale", "translation", "rotation_wxyz"])
def test_rig_missing_field(tmp_path, field):
    write_rig_ground_truth(tmp_path / "r.json", random_rig(1))
    doc = json.loads((tmp_path / "r.json").read_text())
    del doc[field]
    (tmp_path / "r.json").write_text(json.dumps(doc))
    with pytest.raises(ParseError, match=field):
        read_rig_ground_truth(tmp_path / "r.json")


def test_rig_malformed(tmp_path):
    (tmp_path / "r.json").write_text('{"rotation_wxyz": [1, 0, 0], "translation": [0, 0, 0], "scale": 1}')
    with pytest.raises(ParseError, match="rotation_wxyz"):
        read_rig_ground_truth(tmp_path / "r.json")
    (tmp_path / "r.json").write_text("{not json")
    with pytest.raises(ParseError):
        read_rig_ground_truth(tmp_path / "r.json")
